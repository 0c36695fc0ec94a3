//! Mild solutions of `x' = A x + g(x) + h u(t)` in sine coordinates.
//!
//! The linear part and the piecewise-constant forcing are integrated exactly
//! per mode; the nonlinearity goes through an exponential integrator
//! (exponential Euler or the fourth-order Cox-Matthews scheme). Steps are split
//! at signal breakpoints so the forcing is constant inside every substep.

pub mod equilibria;
mod etd;
pub mod picard;

use std::io::{self, Write};

use crate::error::{invalid, Error, Result};
use crate::signals::{StepSignal, Time};
use crate::spectral::{self, DirichletSpectrum, SineTransform, SpectralState};

pub use equilibria::{default_seeds, equilibria, EquilibriumReport, NewtonConfig};
pub use etd::{phi_functions, Scheme};

/// Real polynomial `sum_i c_i r^i`, coefficients in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Polynomial {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    #[inline]
    pub fn derivative(&self, r: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, c)| acc * r + i as f64 * c)
    }
}

/// Piecewise-linear `alpha: [0, inf) -> R` through `(knots[i], values[i])`,
/// constant beyond the last knot.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaTable {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl AlphaTable {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<AlphaTable> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(invalid("alpha table needs matching, non-empty knots and values"));
        }
        if knots[0] != 0.0 {
            return Err(invalid("alpha table must start at r = 0"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("alpha knots must be strictly increasing"));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(invalid("alpha table entries must be finite"));
        }
        Ok(AlphaTable { knots, values })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn segment(&self, r: f64) -> Option<usize> {
        let i = self.knots.partition_point(|&k| k <= r);
        (i < self.knots.len()).then(|| i - 1)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.segment(r) {
            Some(i) => {
                let (k0, k1) = (self.knots[i], self.knots[i + 1]);
                let w = (r - k0) / (k1 - k0);
                self.values[i] * (1.0 - w) + self.values[i + 1] * w
            }
            None => *self.values.last().expect("non-empty"),
        }
    }

    /// Right derivative of `alpha` at `r`.
    pub fn slope(&self, r: f64) -> f64 {
        match self.segment(r) {
            Some(i) => (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i]),
            None => 0.0,
        }
    }

    /// `sup_{r >= r0} alpha(r)`.
    pub fn sup_from(&self, r0: f64) -> f64 {
        self.knots
            .iter()
            .zip(&self.values)
            .filter(|(k, _)| **k > r0)
            .map(|(_, v)| *v)
            .fold(self.eval(r0), f64::max)
    }

    /// Upper bound for `sup_{r in [0, r0]} |alpha(r)| r^2`, exact at knots.
    ///
    /// On each linear piece `|alpha|` peaks at an end point, so the piece maximum
    /// is at most `max(|alpha(a)|, |alpha(b)|) * b^2`.
    pub fn weighted_sup_until(&self, r0: f64) -> f64 {
        let mut pts: Vec<f64> = self.knots.iter().copied().filter(|&k| k < r0).collect();
        pts.push(r0);
        pts.windows(2)
            .map(|w| self.eval(w[0]).abs().max(self.eval(w[1]).abs()) * w[1] * w[1])
            .fold(0.0, f64::max)
    }
}

/// Nonlinear term `g`.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    /// `g(x)(z) = p(x(z))`, evaluated on the collocation grid.
    Pointwise(Polynomial),
    /// `g(x) = alpha(||x||) x`.
    NormScaled(AlphaTable),
}

impl Nonlinearity {
    pub fn zero() -> Nonlinearity {
        Nonlinearity::Pointwise(Polynomial::new(Vec::new()))
    }

    pub fn pointwise(coeffs: Vec<f64>) -> Nonlinearity {
        Nonlinearity::Pointwise(Polynomial::new(coeffs))
    }

    /// Polynomial of odd degree with negative leading coefficient.
    pub fn dissipative_polynomial(coeffs: Vec<f64>) -> Result<Nonlinearity> {
        let p = Polynomial::new(coeffs);
        match p.degree() {
            Some(d) if d % 2 == 1 && p.leading() < 0.0 => Ok(Nonlinearity::Pointwise(p)),
            _ => Err(invalid(
                "dissipative polynomial needs odd degree and negative leading coefficient",
            )),
        }
    }

    /// `g(r) = lambda (r - r^3)`.
    pub fn chafee_infante(lambda: f64) -> Nonlinearity {
        Nonlinearity::pointwise(vec![0.0, lambda, 0.0, -lambda])
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Pointwise(p) if p.is_zero())
    }

    /// `true` when `g` maps `-x` to `-g(x)`.
    pub fn is_odd(&self) -> bool {
        match self {
            Nonlinearity::Pointwise(p) => p.coefficients().iter().step_by(2).all(|&c| c == 0.0),
            Nonlinearity::NormScaled(_) => true,
        }
    }
}

/// The semilinear problem on `(0, L)`: spectrum, nonlinearity and forcing profile.
#[derive(Clone, Debug)]
pub struct EvolutionProblem {
    spectrum: DirichletSpectrum,
    g: Nonlinearity,
    h: SpectralState,
    h_norm: f64,
    transform: SineTransform,
}

impl EvolutionProblem {
    pub fn new(spectrum: DirichletSpectrum, g: Nonlinearity, h: SpectralState) -> Result<Self> {
        let grid = SineTransform::default_grid(spectrum.modes());
        Self::with_grid(spectrum, g, h, grid)
    }

    pub fn with_grid(spectrum: DirichletSpectrum, g: Nonlinearity, h: SpectralState, grid: usize) -> Result<Self> {
        spectrum.check(&h)?;
        if !h.is_finite() {
            return Err(invalid("forcing profile must be finite"));
        }
        let transform = SineTransform::new(spectrum.length(), spectrum.modes(), grid)?;
        let h_norm = h.norm();
        Ok(EvolutionProblem {
            spectrum,
            g,
            h,
            h_norm,
            transform,
        })
    }

    pub fn spectrum(&self) -> &DirichletSpectrum {
        &self.spectrum
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.g
    }

    pub fn forcing(&self) -> &SpectralState {
        &self.h
    }

    pub fn forcing_norm(&self) -> f64 {
        self.h_norm
    }

    pub fn transform(&self) -> &SineTransform {
        &self.transform
    }

    pub fn modes(&self) -> usize {
        self.spectrum.modes()
    }

    /// Same problem on a different truncation (forcing padded or cut).
    pub fn refined(&self, modes: usize) -> Result<EvolutionProblem> {
        let spectrum = DirichletSpectrum::new(self.spectrum.length(), modes)?;
        EvolutionProblem::new(spectrum, self.g.clone(), self.h.resized(modes))
    }

    pub(crate) fn workspace(&self) -> Workspace {
        Workspace {
            grid: vec![0.0; self.transform.grid()],
            scratch: vec![0.0; self.transform.scratch_len()],
        }
    }

    /// `out = P g(x) + level * h`.
    pub(crate) fn rhs_into(&self, x: &[f64], level: f64, out: &mut [f64], ws: &mut Workspace) {
        match &self.g {
            Nonlinearity::Pointwise(p) if p.is_zero() => out.fill(0.0),
            Nonlinearity::Pointwise(p) => {
                self.transform.synthesize_into(x, &mut ws.grid, &mut ws.scratch);
                for v in ws.grid.iter_mut() {
                    *v = p.eval(*v);
                }
                self.transform.analyze_into(&mut ws.grid, out, &mut ws.scratch);
            }
            Nonlinearity::NormScaled(alpha) => {
                let a = alpha.eval(spectral::norm(x));
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = a * xi;
                }
            }
        }
        if level != 0.0 {
            for (o, hk) in out.iter_mut().zip(self.h.coefficients()) {
                *o += level * hk;
            }
        }
    }

    /// Galerkin nonlinearity `P g(x)` (no forcing).
    pub fn nonlinear_term(&self, x: &SpectralState) -> Result<SpectralState> {
        self.spectrum.check(x)?;
        let mut out = vec![0.0; self.modes()];
        let mut ws = self.workspace();
        self.rhs_into(x.coefficients(), 0.0, &mut out, &mut ws);
        Ok(SpectralState::new(out))
    }

    /// `<x, g(x)>` with the grid quadrature (exact for the norm-scaled case).
    pub fn pairing(&self, x: &SpectralState) -> Result<f64> {
        self.spectrum.check(x)?;
        Ok(match &self.g {
            Nonlinearity::Pointwise(p) => {
                let y = self.transform.synthesize(x)?;
                let h = y.spacing();
                h * y.values.iter().map(|&v| v * p.eval(v)).sum::<f64>()
            }
            Nonlinearity::NormScaled(alpha) => {
                let n = x.norm();
                alpha.eval(n) * n * n
            }
        })
    }
}

pub(crate) struct Workspace {
    grid: Vec<f64>,
    scratch: Vec<f64>,
}

/// Time-stepping parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    /// Output and maximal step size, in seconds.
    pub dt: f64,
    pub scheme: Scheme,
    /// Cross-check the endpoint against the Picard fixed-point oracle.
    pub picard_oracle: bool,
    /// Norm above which a run is aborted as a finite escape.
    pub ceiling: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 0.01,
            scheme: Scheme::Etdrk4,
            picard_oracle: false,
            ceiling: 1e6,
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64) -> Self {
        IntegratorConfig {
            dt,
            ..Default::default()
        }
    }

    fn step(&self) -> Result<Time> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt = {} must be positive", self.dt)));
        }
        let step = Time::from_secs(self.dt)?;
        if step == Time::ZERO {
            return Err(invalid(format!("dt = {} is below the time resolution", self.dt)));
        }
        Ok(step)
    }
}

/// Sampled solution: states at `0, dt, 2 dt, ..., t_end`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralState>,
    /// `||endpoint - picard_endpoint||` when the oracle was requested.
    pub oracle_discrepancy: Option<f64>,
}

impl Trajectory {
    pub fn endpoint(&self) -> &SpectralState {
        self.states
            .last()
            .expect("trajectories hold at least the initial state")
    }

    /// CSV with header `t,a_1,...,a_N,norm`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.states.first().map_or(0, |s| s.len());
        write!(w, "t")?;
        for k in 1..=n {
            write!(w, ",a_{k}")?;
        }
        writeln!(w, ",norm")?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t}")?;
            for a in x.coefficients() {
                write!(w, ",{a}")?;
            }
            writeln!(w, ",{}", x.norm())?;
        }
        Ok(())
    }
}

/// Streams the solution on `[0, t_end]` to `observe(t, coefficients)` at every
/// output time (including `t = 0`) and returns the endpoint.
///
/// Output times are multiples of `dt`; the final step is shortened to land on
/// `t_end`. Internally each step is split at the breakpoints of `u`.
pub fn integrate<F>(
    p: &EvolutionProblem,
    x0: &SpectralState,
    u: &StepSignal,
    t_end: f64,
    cfg: &IntegratorConfig,
    mut observe: F,
) -> Result<SpectralState>
where
    F: FnMut(Time, &[f64]),
{
    p.spectrum.check(x0)?;
    let end = Time::from_secs(t_end)?;
    let dt = cfg.step()?;
    let mut stepper = etd::Stepper::new(p, cfg.scheme, dt);
    let mut x = x0.coefficients().to_vec();
    let mut t = Time::ZERO;
    observe(t, &x);
    while t < end {
        let next = Time::from_ticks((t.ticks() + dt.ticks()).min(end.ticks()))?;
        let mut s = t;
        while s < next {
            let seg_end = u.next_breakpoint_after(s).map_or(next, |b| b.min(next));
            stepper.advance(&mut x, seg_end.saturating_sub(s), u.level_at(s));
            s = seg_end;
            let n = spectral::norm(&x);
            if !(n <= cfg.ceiling) {
                return Err(Error::FiniteEscape {
                    t: s.as_secs(),
                    norm: n,
                    ceiling: cfg.ceiling,
                });
            }
        }
        t = next;
        observe(t, &x);
    }
    Ok(SpectralState::new(x))
}

/// Solves on `[0, t_end]` and keeps every output state.
pub fn solve(
    p: &EvolutionProblem,
    x0: &SpectralState,
    u: &StepSignal,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    let mut times = Vec::new();
    let mut states = Vec::new();
    integrate(p, x0, u, t_end, cfg, |t, x| {
        times.push(t.as_secs());
        states.push(SpectralState::new(x.to_vec()));
    })?;
    let oracle_discrepancy = if cfg.picard_oracle {
        let reference = picard::picard_endpoint(p, x0, u, t_end, &picard::PicardConfig::default())?;
        Some(reference.distance(states.last().expect("non-empty")))
    } else {
        None
    };
    Ok(Trajectory {
        times,
        states,
        oracle_discrepancy,
    })
}

/// Endpoint of [`integrate`] without storing the path.
pub fn flow(
    p: &EvolutionProblem,
    x0: &SpectralState,
    u: &StepSignal,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<SpectralState> {
    integrate(p, x0, u, t_end, cfg, |_, _| {})
}

/// `S_u(t, s, x_s)`: the state at `t` of the solution started from `x_s` at
/// time `s` under the input `u`.
pub fn semiprocess(
    p: &EvolutionProblem,
    t: f64,
    s: f64,
    x_s: &SpectralState,
    u: &StepSignal,
    cfg: &IntegratorConfig,
) -> Result<SpectralState> {
    let (ts, tt) = (Time::from_secs(s)?, Time::from_secs(t)?);
    if tt < ts {
        return Err(invalid(format!("semiprocess needs t >= s, got t = {t}, s = {s}")));
    }
    if tt == ts {
        p.spectrum.check(x_s)?;
        return Ok(x_s.clone());
    }
    let span = Time::from_ticks(tt.ticks() - ts.ticks())?;
    flow(p, x_s, &u.translate(ts), span.as_secs(), cfg)
}

/// `||S_u(t + h, 0, x0) - S_{u(. + h)}(t, 0, S_u(h, 0, x0))||`.
pub fn cocycle_residual(
    p: &EvolutionProblem,
    x0: &SpectralState,
    u: &StepSignal,
    t: f64,
    h: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let (tt, th) = (Time::from_secs(t)?, Time::from_secs(h)?);
    let direct = flow(p, x0, u, (tt + th).as_secs(), cfg)?;
    let mid = flow(p, x0, u, th.as_secs(), cfg)?;
    let composed = flow(p, &mid, &u.translate(th), tt.as_secs(), cfg)?;
    Ok(direct.distance(&composed))
}
