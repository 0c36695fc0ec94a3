//! Deterministic point and signal sampling.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::signals::StepSignal;
use crate::spectral::SpectralState;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fractional parts of the Kronecker sequence with generalised golden ratio
/// `phi_d` (`phi_d^{d+1} = phi_d + 1`), randomly shifted.
fn kronecker(dim: usize, count: usize, shift: &[f64]) -> Vec<Vec<f64>> {
    let mut g = 2.0f64;
    for _ in 0..64 {
        g = (1.0 + g).powf(1.0 / (dim as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=dim).map(|i| (1.0 / g.powi(i as i32)).fract()).collect();
    (1..=count)
        .map(|n| {
            alpha
                .iter()
                .zip(shift)
                .map(|(a, s)| (s + n as f64 * a).fract())
                .collect()
        })
        .collect()
}

/// Low-discrepancy points in the closed ball of radius `radius`.
///
/// The first `dim` sequence coordinates become a direction through the normal
/// quantile function; the last sets the radius `radius * v`.
pub fn quasi_random_ball(dim: usize, count: usize, radius: f64, seed: u64) -> Vec<SpectralState> {
    let mut rng = rng_stream(seed, 0);
    let shift: Vec<f64> = (0..=dim).map(|_| rng.random::<f64>()).collect();
    let normal = Normal::standard();
    kronecker(dim + 1, count, &shift)
        .into_iter()
        .map(|p| {
            let dir: Vec<f64> = p[..dim]
                .iter()
                .map(|&q| normal.inverse_cdf(q.clamp(1e-12, 1.0 - 1e-12)))
                .collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = radius * p[dim];
            SpectralState::new(dir.iter().map(|v| v * r / norm).collect())
        })
        .collect()
}

fn gaussian<R: RngExt>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniformly distributed point in the ball of radius `radius`.
pub fn random_ball_point<R: RngExt>(rng: &mut R, dim: usize, radius: f64) -> SpectralState {
    let dir: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    SpectralState::new(dir.iter().map(|v| v * r / norm).collect())
}

/// Random state with coefficients uniform in `[-scale, scale] / k^2`.
pub fn random_smooth_state<R: RngExt>(rng: &mut R, dim: usize, scale: f64) -> SpectralState {
    SpectralState::new(
        (1..=dim)
            .map(|k| scale * (2.0 * rng.random::<f64>() - 1.0) / (k * k) as f64)
            .collect(),
    )
}

/// Step signal with `pieces` random breakpoints in `(0, horizon)` (on a 1 ms
/// grid), levels and tail uniform in `[-amplitude, amplitude]`.
pub fn random_step_signal<R: RngExt>(rng: &mut R, amplitude: f64, horizon: f64, pieces: usize) -> StepSignal {
    let mut times: Vec<f64> = (0..pieces)
        .map(|_| (rng.random::<f64>() * horizon * 1e3).round().max(1.0) / 1e3)
        .collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut level = || amplitude * (2.0 * rng.random::<f64>() - 1.0);
    let steps: Vec<(f64, f64)> = times.iter().map(|&t| (t, level())).collect();
    let tail = level();
    StepSignal::from_steps(&steps, tail).expect("sorted distinct positive breakpoints")
}
