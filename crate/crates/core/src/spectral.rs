//! Sine-series state space on `(0, L)` with homogeneous Dirichlet conditions.
//!
//! A state is the coefficient vector `a_k` of `x = sum_k a_k e_k` with
//! `e_k(z) = sqrt(2/L) sin(k pi z / L)`, an orthonormal basis of `L^2(0, L)`
//! diagonalising the Dirichlet Laplacian: `-e_k'' = lambda_k e_k`,
//! `lambda_k = (k pi / L)^2`.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use rustdct::{DctPlanner, Dst1};

use crate::error::{invalid, Error, Result};

/// Truncated spectrum of the Dirichlet Laplacian on `(0, L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletSpectrum {
    length: f64,
    eigenvalues: Vec<f64>,
}

impl DirichletSpectrum {
    pub fn new(length: f64, modes: usize) -> Result<DirichletSpectrum> {
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid(format!("domain length {length} must be positive")));
        }
        if modes == 0 {
            return Err(invalid("at least one mode is required"));
        }
        let eigenvalues = (1..=modes)
            .map(|k| {
                let w = k as f64 * PI / length;
                w * w
            })
            .collect();
        Ok(DirichletSpectrum { length, eigenvalues })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `lambda_k = (k pi / L)^2`, `k = 1..=N`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Smallest eigenvalue, which is also the Poincare constant of `(0, L)`.
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Exact heat semigroup: `a_k -> exp(-lambda_k t) a_k`.
    pub fn semigroup_apply(&self, x: &SpectralState, t: f64) -> Result<SpectralState> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        self.check(x)?;
        Ok(SpectralState(
            x.0.iter()
                .zip(&self.eigenvalues)
                .map(|(a, l)| a * (-l * t).exp())
                .collect(),
        ))
    }

    pub(crate) fn check(&self, x: &SpectralState) -> Result<()> {
        if x.len() != self.modes() {
            return Err(Error::DimensionMismatch {
                expected: self.modes(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Sine-series coefficients of a state in `L^2(0, L)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SpectralState(Vec<f64>);

impl SpectralState {
    pub fn new(coefficients: Vec<f64>) -> SpectralState {
        SpectralState(coefficients)
    }

    pub fn zeros(modes: usize) -> SpectralState {
        SpectralState(vec![0.0; modes])
    }

    /// The basis vector `e_k` (1-based `k`).
    pub fn basis(modes: usize, k: usize) -> SpectralState {
        assert!((1..=modes).contains(&k), "mode {k} outside 1..={modes}");
        let mut a = vec![0.0; modes];
        a[k - 1] = 1.0;
        SpectralState(a)
    }

    /// Copies the leading coefficients and zero-pads up to `modes`.
    pub fn resized(&self, modes: usize) -> SpectralState {
        let mut a = self.0.clone();
        a.resize(modes, 0.0);
        SpectralState(a)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// L^2 norm by Parseval.
    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn distance(&self, other: &SpectralState) -> f64 {
        distance(&self.0, &other.0)
    }

    pub fn dot(&self, other: &SpectralState) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, factor: f64) -> SpectralState {
        SpectralState(self.0.iter().map(|a| a * factor).collect())
    }

    pub fn sub(&self, other: &SpectralState) -> SpectralState {
        SpectralState(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &SpectralState) -> SpectralState {
        SpectralState(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.is_finite())
    }
}

impl From<Vec<f64>> for SpectralState {
    fn from(v: Vec<f64>) -> Self {
        SpectralState(v)
    }
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `min_{theta in cloud} ||x - theta||`.
pub fn dist_point_to_cloud(x: &SpectralState, cloud: &[SpectralState]) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(cloud.iter().map(|c| x.distance(c)).fold(f64::INFINITY, f64::min))
}

/// Values of a function at the interior grid points `z_j = j L / (M + 1)`,
/// `j = 1..=M`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub length: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn spacing(&self) -> f64 {
        self.length / (self.values.len() + 1) as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (1..=self.values.len()).map(move |j| j as f64 * h)
    }

    /// Midpoint-free grid quadrature `h * sum_j f(z_j)`.
    pub fn integral(&self) -> f64 {
        self.spacing() * self.values.iter().sum::<f64>()
    }
}

/// Fast sine transform between `N` coefficients and `M >= N` grid values.
///
/// `analyze(synthesize(a)) == a` up to rounding for every `M >= N`: the sampled
/// sines are orthogonal on the grid. For a product `f(y)` of a resolved state,
/// the analysed coefficients are the Galerkin projection computed with the
/// grid quadrature, and `<y, analyze(f(y))>` equals that quadrature exactly.
#[derive(Clone)]
pub struct SineTransform {
    modes: usize,
    grid: usize,
    length: f64,
    synth_scale: f64,
    analyze_scale: f64,
    dst: Arc<dyn Dst1<f64>>,
}

impl fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SineTransform")
            .field("modes", &self.modes)
            .field("grid", &self.grid)
            .field("length", &self.length)
            .finish()
    }
}

impl SineTransform {
    pub fn new(length: f64, modes: usize, grid: usize) -> Result<SineTransform> {
        if modes == 0 {
            return Err(invalid("at least one mode is required"));
        }
        if grid < modes {
            return Err(Error::Aliasing { modes, grid });
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid(format!("domain length {length} must be positive")));
        }
        let dst = DctPlanner::new().plan_dst1(grid);
        let synth_scale = (2.0 / length).sqrt();
        let analyze_scale = length / (grid + 1) as f64 * synth_scale;
        Ok(SineTransform {
            modes,
            grid,
            length,
            synth_scale,
            analyze_scale,
            dst,
        })
    }

    /// Default dealiased grid for cubic nonlinearities: `M + 1 = 4N`, which
    /// keeps the underlying FFT length a power of two when `N` is.
    pub fn default_grid(modes: usize) -> usize {
        4 * modes - 1
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / (self.grid + 1) as f64
    }

    pub fn scratch_len(&self) -> usize {
        self.dst.get_scratch_len()
    }

    /// Writes grid values of the series `coeffs` into `out` (`len == M`).
    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.modes);
        debug_assert_eq!(out.len(), self.grid);
        out[..self.modes].copy_from_slice(coeffs);
        out[self.modes..].fill(0.0);
        self.dst.process_dst1_with_scratch(out, scratch);
        for v in out.iter_mut() {
            *v *= self.synth_scale;
        }
    }

    /// Projects grid values onto the first `N` modes. `grid` is overwritten.
    pub fn analyze_into(&self, grid: &mut [f64], out: &mut [f64], scratch: &mut [f64]) {
        debug_assert_eq!(grid.len(), self.grid);
        debug_assert_eq!(out.len(), self.modes);
        self.dst.process_dst1_with_scratch(grid, scratch);
        for (o, v) in out.iter_mut().zip(grid.iter()) {
            *o = v * self.analyze_scale;
        }
    }

    pub fn synthesize(&self, x: &SpectralState) -> Result<GridFunction> {
        if x.len() != self.modes {
            return Err(Error::DimensionMismatch {
                expected: self.modes,
                got: x.len(),
            });
        }
        let mut values = vec![0.0; self.grid];
        let mut scratch = vec![0.0; self.scratch_len()];
        self.synthesize_into(x.coefficients(), &mut values, &mut scratch);
        Ok(GridFunction {
            length: self.length,
            values,
        })
    }

    pub fn analyze(&self, g: &GridFunction) -> Result<SpectralState> {
        if g.values.len() != self.grid {
            return Err(Error::DimensionMismatch {
                expected: self.grid,
                got: g.values.len(),
            });
        }
        let mut buf = g.values.clone();
        let mut out = vec![0.0; self.modes];
        let mut scratch = vec![0.0; self.scratch_len()];
        self.analyze_into(&mut buf, &mut out, &mut scratch);
        Ok(SpectralState(out))
    }
}

/// Writes a state as CSV rows `k,a_k`.
pub fn write_state_csv<W: Write>(mut w: W, x: &SpectralState) -> io::Result<()> {
    writeln!(w, "k,a_k")?;
    for (k, a) in x.coefficients().iter().enumerate() {
        writeln!(w, "{},{}", k + 1, a)?;
    }
    Ok(())
}

/// Reads the `k,a_k` CSV form back.
pub fn read_state_csv(text: &str) -> Result<SpectralState> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "k,a_k" => {}
        _ => return Err(Error::Parse("expected header `k,a_k`".into())),
    }
    let mut coeffs = Vec::new();
    for line in lines {
        let (k, a) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("bad row `{line}`")))?;
        let k: usize = k.trim().parse().map_err(|_| Error::Parse(format!("bad mode `{k}`")))?;
        if k != coeffs.len() + 1 {
            return Err(Error::Parse(format!("mode {k} out of order")));
        }
        coeffs.push(a.trim().parse().map_err(|_| Error::Parse(format!("bad value `{a}`")))?);
    }
    Ok(SpectralState(coeffs))
}
