//! Reference solver: Picard iteration on the variation-of-constants formula
//!
//! ```text
//! x(t) = e^{At} x0 + int_0^t e^{A(t-s)} (g(x(s)) + h u(s)) ds
//! ```
//!
//! on a fine node grid. The forcing integral is exact per piece of `u`; the
//! nonlinear integral uses exponentially weighted trapezoid weights on each
//! node interval. The fixed point is iterated window by window. Grid values
//! come from direct sine sums, so nothing here shares code with the
//! exponential integrators or the fast transform.

use std::f64::consts::PI;

use super::{EvolutionProblem, Nonlinearity};
use crate::error::{invalid, Result};
use crate::signals::StepSignal;
use crate::spectral::SpectralState;

#[derive(Clone, Debug, PartialEq)]
pub struct PicardConfig {
    /// Node spacing of the quadrature grid, in seconds.
    pub node_spacing: f64,
    /// Length of each fixed-point window.
    pub window: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Combine spacings `d` and `d/2` as `(4 x_{d/2} - x_d) / 3`.
    pub richardson: bool,
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            node_spacing: 2e-4,
            window: 0.05,
            tolerance: 1e-14,
            max_iterations: 200,
            richardson: true,
        }
    }
}

struct Direct {
    /// `table[j][k] = sqrt(2/L) sin((k+1) pi z_j / L)`.
    table: Vec<Vec<f64>>,
    spacing: f64,
}

impl Direct {
    fn new(p: &EvolutionProblem) -> Direct {
        let length = p.spectrum().length();
        let grid = p.transform().grid();
        let spacing = length / (grid + 1) as f64;
        let scale = (2.0 / length).sqrt();
        let table = (1..=grid)
            .map(|j| {
                let z = j as f64 * spacing;
                (1..=p.modes())
                    .map(|k| scale * (k as f64 * PI * z / length).sin())
                    .collect()
            })
            .collect();
        Direct { table, spacing }
    }

    fn nonlinear(&self, g: &Nonlinearity, a: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        match g {
            Nonlinearity::Pointwise(p) => {
                if p.is_zero() {
                    return;
                }
                for row in &self.table {
                    let y: f64 = row.iter().zip(a).map(|(s, c)| s * c).sum();
                    let gy = p.eval(y) * self.spacing;
                    for (o, s) in out.iter_mut().zip(row) {
                        *o += gy * s;
                    }
                }
            }
            Nonlinearity::NormScaled(alpha) => {
                let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                let s = alpha.eval(n);
                for (o, v) in out.iter_mut().zip(a) {
                    *o = s * v;
                }
            }
        }
    }
}

/// `1 - e^{-z}(1 + z)` without cancellation for small `z >= 0`.
fn one_minus_exp_poly(z: f64) -> f64 {
    if z < 0.1 {
        // sum_{j>=2} (-1)^j (j - 1) z^j / j!
        let mut term = z * z / 2.0; // z^j / j! at j = 2
        let mut sum = term;
        for j in 3..30 {
            term *= z / j as f64;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (j - 1) as f64 * term;
        }
        sum
    } else {
        1.0 - (-z).exp() * (1.0 + z)
    }
}

/// Trapezoid weights `(w0, w1)` with `int_0^d e^{-l(d-s)} f(s) ds ~ w0 f(0) + w1 f(d)`.
fn weights(lambda: f64, d: f64) -> (f64, f64) {
    let z = lambda * d;
    let total = if z < 1e-3 {
        d * (1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0)
    } else {
        -(-z).exp_m1() / lambda
    };
    let w0 = d * one_minus_exp_poly(z) / (z * z).max(f64::MIN_POSITIVE);
    let w0 = if z == 0.0 { d / 2.0 } else { w0 };
    (w0, total - w0)
}

/// Exact `int_a^b e^{-l(t - s)} u(s) ds` for the piecewise-constant `u`.
fn forcing_integral(u: &StepSignal, lambda: f64, a: f64, b: f64) -> f64 {
    let bps: Vec<f64> = u.breakpoints().iter().map(|t| t.as_secs()).collect();
    let mut acc = 0.0;
    let mut lo = a;
    while lo < b {
        let next = bps.iter().copied().find(|&t| t > lo).unwrap_or(f64::INFINITY);
        let hi = next.min(b);
        let level = u.evaluate(lo).unwrap_or(0.0);
        if level != 0.0 {
            // e^{-l(b - hi)} (1 - e^{-l(hi - lo)}) / l
            acc += level * (-lambda * (b - hi)).exp() * -(-lambda * (hi - lo)).exp_m1() / lambda;
        }
        lo = hi;
    }
    acc
}

fn run(
    p: &EvolutionProblem,
    x0: &SpectralState,
    u: &StepSignal,
    t_end: f64,
    cfg: &PicardConfig,
    spacing: f64,
) -> Result<Vec<f64>> {
    let n = p.modes();
    let eig = p.spectrum().eigenvalues();
    let h = p.forcing().coefficients();
    let direct = Direct::new(p);
    let g = p.nonlinearity();

    let mut x = x0.coefficients().to_vec();
    let mut t0 = 0.0;
    while t0 < t_end {
        let len = (t_end - t0).min(cfg.window);
        let nodes = ((len / spacing).ceil() as usize).max(1);
        let d = len / nodes as f64;
        let decay: Vec<f64> = eig.iter().map(|l| (-l * d).exp()).collect();
        let w: Vec<(f64, f64)> = eig.iter().map(|&l| weights(l, d)).collect();
        let forcing: Vec<Vec<f64>> = (0..nodes)
            .map(|i| {
                let (a, b) = (t0 + i as f64 * d, t0 + (i + 1) as f64 * d);
                eig.iter()
                    .zip(h)
                    .map(|(&l, &hk)| {
                        if hk == 0.0 {
                            0.0
                        } else {
                            hk * forcing_integral(u, l, a, b)
                        }
                    })
                    .collect()
            })
            .collect();

        let mut path: Vec<Vec<f64>> = vec![x.clone(); nodes + 1];
        let mut nl: Vec<Vec<f64>> = vec![vec![0.0; n]; nodes + 1];
        let mut converged = false;
        for _ in 0..cfg.max_iterations {
            for (xi, fi) in path.iter().zip(nl.iter_mut()) {
                direct.nonlinear(g, xi, fi);
            }
            let mut change: f64 = 0.0;
            let mut next = x.clone();
            for i in 0..nodes {
                let prev = next.clone();
                for k in 0..n {
                    next[k] = decay[k] * prev[k] + w[k].0 * nl[i][k] + w[k].1 * nl[i + 1][k] + forcing[i][k];
                }
                let diff = next
                    .iter()
                    .zip(&path[i + 1])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                change = change.max(diff);
                path[i + 1].copy_from_slice(&next);
            }
            if !change.is_finite() {
                return Err(invalid("Picard iteration diverged"));
            }
            if change <= cfg.tolerance * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(invalid(format!(
                "Picard iteration did not converge on window at t = {t0}"
            )));
        }
        x = path[nodes].clone();
        t0 += len;
    }
    Ok(x)
}

/// Endpoint `x(t_end)` of the reference solver.
pub fn picard_endpoint(
    p: &EvolutionProblem,
    x0: &SpectralState,
    u: &StepSignal,
    t_end: f64,
    cfg: &PicardConfig,
) -> Result<SpectralState> {
    if !(t_end >= 0.0) {
        return Err(invalid("t_end must be non-negative"));
    }
    p.spectrum().check(x0)?;
    let coarse = run(p, x0, u, t_end, cfg, cfg.node_spacing)?;
    if !cfg.richardson {
        return Ok(SpectralState::new(coarse));
    }
    let fine = run(p, x0, u, t_end, cfg, cfg.node_spacing / 2.0)?;
    Ok(SpectralState::new(
        fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DirichletSpectrum;

    #[test]
    fn weights_integrate_linear_functions_exactly() {
        for (l, d) in [(1.0, 1e-3), (50.0, 0.01), (3.0, 0.5), (1e-8, 0.1)] {
            let (w0, w1) = weights(l, d);
            // f = 1
            let exact_one = -(-l * d).exp_m1() / l;
            assert!((w0 + w1 - exact_one).abs() < 1e-14 * (1.0 + exact_one));
            // f(s) = s, exact int_0^d e^{-l(d-s)} s ds = (l d - 1 + e^{-l d}) / l^2
            let exact_s = (l * d - 1.0 + (-l * d).exp()) / (l * l);
            if l > 1e-4 {
                assert!((w1 * d - exact_s).abs() < 1e-12 * (1.0 + exact_s.abs()), "{l} {d}");
            }
        }
    }

    #[test]
    fn forcing_integral_is_exact_across_breakpoints() {
        let u = StepSignal::from_steps(&[(0.3, 2.0)], -1.0).unwrap();
        let l = 4.0;
        let got = forcing_integral(&u, l, 0.1, 0.6);
        let exact = 2.0 * ((-l * 0.3f64).exp() - (-l * 0.5f64).exp()) / l - (1.0 - (-l * 0.3f64).exp()) / l;
        assert!((got - exact).abs() < 1e-14);
    }

    #[test]
    fn linear_forced_mode_matches_closed_form() {
        let p = EvolutionProblem::new(
            DirichletSpectrum::new(PI, 4).unwrap(),
            Nonlinearity::zero(),
            SpectralState::basis(4, 1),
        )
        .unwrap();
        let x0 = SpectralState::basis(4, 2);
        let end = picard_endpoint(&p, &x0, &StepSignal::constant(1.0), 1.0, &PicardConfig::default()).unwrap();
        assert!((end.coefficients()[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((end.coefficients()[1] - (-4.0f64).exp()).abs() < 1e-12);
    }
}
