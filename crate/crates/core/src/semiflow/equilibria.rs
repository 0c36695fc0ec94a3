//! Steady states of the Galerkin system `F(x) = -Lambda x + P g(x) + c h = 0`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{EvolutionProblem, Nonlinearity};
use crate::error::{Error, Result};
use crate::par;
use crate::spectral::SpectralState;

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonConfig {
    pub max_iterations: usize,
    /// Converged once `||F(x)|| <= residual_tol`.
    pub residual_tol: f64,
    /// Roots closer than this are merged.
    pub cluster_radius: f64,
    /// Constant input level `c`; 0 for the undisturbed system.
    pub input_level: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            max_iterations: 100,
            residual_tol: 1e-10,
            cluster_radius: 1e-6,
            input_level: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub roots: Vec<SpectralState>,
    /// Seeds that did not converge.
    pub dropped: usize,
    /// Residual `||F||` of each root, in the order of `roots`.
    pub residuals: Vec<f64>,
}

/// `0` and `+-c e_k` for `c in {0.5, 1, 2}`, `k <= min(4, N)`.
pub fn default_seeds(modes: usize) -> Vec<SpectralState> {
    let mut seeds = vec![SpectralState::zeros(modes)];
    for k in 1..=modes.min(4) {
        for c in [0.5, 1.0, 2.0] {
            for sign in [1.0, -1.0] {
                seeds.push(SpectralState::basis(modes, k).scaled(sign * c));
            }
        }
    }
    seeds
}

fn residual(p: &EvolutionProblem, x: &SpectralState, level: f64) -> SpectralState {
    let mut f = p.nonlinear_term(x).expect("dimension checked by caller").into_inner();
    for ((fk, lk), (xk, hk)) in f
        .iter_mut()
        .zip(p.spectrum().eigenvalues())
        .zip(x.coefficients().iter().zip(p.forcing().coefficients()))
    {
        *fk += -lk * xk + level * hk;
    }
    SpectralState::new(f)
}

/// Analytic Jacobian of `F` at `x`.
fn jacobian(p: &EvolutionProblem, x: &SpectralState) -> DMatrix<f64> {
    let n = p.modes();
    let mut jac = DMatrix::zeros(n, n);
    match p.nonlinearity() {
        Nonlinearity::Pointwise(poly) => {
            let length = p.spectrum().length();
            let grid = p.transform().grid();
            let spacing = length / (grid + 1) as f64;
            let y = p.transform().synthesize(x).expect("dimension checked by caller");
            let scale = (2.0 / length).sqrt();
            // J_kl = h sum_j e_k(z_j) g'(y_j) e_l(z_j)
            let mut basis = vec![0.0; n];
            for (j, &yj) in y.values.iter().enumerate() {
                let z = (j + 1) as f64 * spacing;
                for (k, b) in basis.iter_mut().enumerate() {
                    *b = scale * ((k + 1) as f64 * PI * z / length).sin();
                }
                let w = spacing * poly.derivative(yj);
                for k in 0..n {
                    let wk = w * basis[k];
                    for l in 0..n {
                        jac[(k, l)] += wk * basis[l];
                    }
                }
            }
        }
        Nonlinearity::NormScaled(alpha) => {
            let r = x.norm();
            let a = alpha.eval(r);
            let da = if r > 0.0 { alpha.slope(r) / r } else { 0.0 };
            let c = x.coefficients();
            for k in 0..n {
                jac[(k, k)] += a;
                for l in 0..n {
                    jac[(k, l)] += da * c[k] * c[l];
                }
            }
        }
    }
    for (k, l) in p.spectrum().eigenvalues().iter().enumerate() {
        jac[(k, k)] -= l;
    }
    jac
}

/// Damped Newton from one seed; `None` when it fails to converge.
fn newton(p: &EvolutionProblem, seed: &SpectralState, cfg: &NewtonConfig) -> Option<(SpectralState, f64)> {
    let mut x = seed.clone();
    let mut f = residual(p, &x, cfg.input_level);
    let mut fnorm = f.norm();
    for _ in 0..cfg.max_iterations {
        if fnorm <= cfg.residual_tol {
            return Some((x, fnorm));
        }
        let jac = jacobian(p, &x);
        let rhs = DVector::from_column_slice(f.coefficients());
        let step = jac.lu().solve(&rhs)?;
        let mut damping = 1.0;
        loop {
            let trial = SpectralState::new(
                x.coefficients()
                    .iter()
                    .zip(step.iter())
                    .map(|(a, s)| a - damping * s)
                    .collect(),
            );
            let ft = residual(p, &trial, cfg.input_level);
            let ftn = ft.norm();
            if ftn.is_finite() && ftn < (1.0 - 1e-4 * damping) * fnorm {
                x = trial;
                f = ft;
                fnorm = ftn;
                break;
            }
            damping *= 0.5;
            if damping < 1e-10 {
                // stalled: accept only if already at rounding level
                return (fnorm <= 1e3 * cfg.residual_tol).then_some((x, fnorm));
            }
        }
    }
    (fnorm <= cfg.residual_tol).then_some((x, fnorm))
}

/// Newton search from every seed, with converged roots merged within
/// `cfg.cluster_radius` (first-found representative kept, seed order).
pub fn equilibria(p: &EvolutionProblem, seeds: &[SpectralState], cfg: &NewtonConfig) -> Result<EquilibriumReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("at least one seed is required".into()));
    }
    for s in seeds {
        p.spectrum().check(s)?;
    }
    let found = par::map(seeds.len(), |i| newton(p, &seeds[i], cfg));
    let mut roots: Vec<SpectralState> = Vec::new();
    let mut residuals = Vec::new();
    let mut dropped = 0;
    for item in found {
        match item {
            Some((x, r)) => {
                if roots.iter().all(|q| q.distance(&x) > cfg.cluster_radius) {
                    roots.push(x);
                    residuals.push(r);
                }
            }
            None => dropped += 1,
        }
    }
    Ok(EquilibriumReport {
        roots,
        dropped,
        residuals,
    })
}
