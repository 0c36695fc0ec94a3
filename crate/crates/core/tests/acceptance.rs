//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use isps_core::attractor::{
    absorbing_ball, approximate_attractor, hausdorff_semidist, upper_semicontinuity_curve, AttractorApprox,
    AttractorConfig, UscConfig,
};
use isps_core::presets::{chafee_infante_sector, preset, Preset};
use isps_core::sampling::{quasi_random_ball, random_ball_point, random_smooth_state, random_step_signal, rng_stream};
use isps_core::semiflow::{
    cocycle_residual, default_seeds, equilibria, flow, solve, EvolutionProblem, IntegratorConfig, NewtonConfig,
    Nonlinearity,
};
use isps_core::signals::{HullSample, StepSignal};
use isps_core::spectral::{DirichletSpectrum, SpectralState};
use isps_core::stability::{
    check_certificate_bound, check_envelope, estimate_gain_curve, isps_envelope, isps_envelope_from_cloud,
    weak_certificate, GainConfig, EPS_CLUSTER,
};
use isps_core::Result;
use rand::RngExt;

const N: usize = 32;
const USC_SIGNAL: &str = "steps: [(2,-0.6),(5,0.8)] tail: 1";
const USC_AMPLITUDES: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn undisturbed_attractor(pr: &Preset, dt: f64) -> Result<AttractorApprox> {
    let cert = &pr.certificate;
    let ball = absorbing_ball(cert, 0.0, 1.0 + cert.gamma.eval(0.0))?;
    let cfg = AttractorConfig::from_decay_rate(cert.omega0, IntegratorConfig::with_dt(dt))?;
    approximate_attractor(&pr.problem, &HullSample::singleton(StepSignal::zero()), &ball, &cfg)
}

fn equilibrium_counts() -> Result<Outcome> {
    let start = Instant::now();
    let mut counts = Vec::new();
    for lambda in [2.0, 10.0] {
        let p = EvolutionProblem::new(
            DirichletSpectrum::new(PI, N)?,
            Nonlinearity::chafee_infante(lambda),
            SpectralState::zeros(N),
        )?;
        let cfg = NewtonConfig {
            cluster_radius: 1e-6,
            ..NewtonConfig::default()
        };
        counts.push(equilibria(&p, &default_seeds(N), &cfg)?.roots.len());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        counts == [3, 7] && secs < 10.0,
        format!(
            "lambda=2: {}, lambda=10: {} equilibria in {secs:.2} s",
            counts[0], counts[1]
        ),
    )
}

fn linear_decay() -> Result<Outcome> {
    let pr = preset("linear_decay", PI, N)?;
    let end = flow(
        &pr.problem,
        &SpectralState::basis(N, 1),
        &StepSignal::zero(),
        1.0,
        &IntegratorConfig::default(),
    )?;
    let err = (end.coefficients()[0] - (-1.0f64).exp()).abs();
    outcome(err < 1e-12, format!("|a_1(1) - e^-1| = {err:.2e}"))
}

fn cocycle_suite() -> Result<Outcome> {
    let start = Instant::now();
    let pr = preset("chafee_infante_lambda2", PI, N)?;
    let cfg = IntegratorConfig::default();
    let mut rng = rng_stream(3, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x0 = random_smooth_state(&mut rng, N, 3.0);
        let u = random_step_signal(&mut rng, 1.0, 4.0, 6);
        let t = (rng.random::<f64>() * 2000.0).round() / 1000.0;
        let h = (rng.random::<f64>() * 2000.0).round() / 1000.0;
        worst = worst.max(cocycle_residual(&pr.problem, &x0, &u, t, h, &cfg)?);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-8 && secs < 60.0,
        format!("worst residual {worst:.2e} over 100 instances in {secs:.2} s"),
    )
}

fn certificate_validity() -> Result<Outcome> {
    let pr = preset("chafee_infante_lambda2", PI, N)?;
    let omega = pr.problem.spectrum().lambda1();
    let cert = weak_certificate(chafee_infante_sector(2.0), pr.problem.forcing_norm(), PI, omega / 2.0)?;
    let cfg = IntegratorConfig::default();
    let mut rng = rng_stream(4, 0);
    let (mut violations, mut worst) = (0, f64::INFINITY);
    for _ in 0..100 {
        let x0 = random_ball_point(&mut rng, N, 6.0);
        let u = random_step_signal(&mut rng, 0.5, 10.0, 8);
        let traj = solve(&pr.problem, &x0, &u, 10.0, &cfg)?;
        let rep = check_certificate_bound(&traj, &cert, u.sup_norm(), 1e-6)?;
        violations += rep.violations.len();
        worst = worst.min(rep.worst_margin);
    }
    outcome(
        violations == 0,
        format!("{violations} violations over 100 runs, worst margin {worst:.3e}"),
    )
}

fn envelope_sweep(theta: &AttractorApprox) -> Result<Outcome> {
    let pr = preset("chafee_infante_lambda2", PI, N)?;
    let cert = &pr.certificate;
    let env = isps_envelope(cert, theta)?;
    let r0 = 0.5;
    let radius = 1.0 + cert.gamma.eval(r0);
    let cfg = IntegratorConfig::default();
    let mut rng = rng_stream(5, 0);
    let (mut violations, mut worst) = (0, f64::INFINITY);
    for _ in 0..50 {
        let x0 = random_ball_point(&mut rng, N, radius);
        let u = random_step_signal(&mut rng, r0, 20.0, 8);
        let traj = solve(&pr.problem, &x0, &u, 20.0, &cfg)?;
        let rep = check_envelope(&traj, &env, theta.points(), u.sup_norm(), EPS_CLUSTER)?;
        violations += rep.violations.len();
        worst = worst.min(rep.worst_margin);
    }
    outcome(
        violations == 0,
        format!(
            "|Theta| = {} points, c = {:.4}, {violations} violations over 50 runs, worst margin {worst:.3e}",
            theta.len(),
            env.c
        ),
    )
}

fn iss_degeneration() -> Result<Outcome> {
    let pr = preset("linear_decay", PI, N)?;
    let cert = &pr.certificate;
    let origin = vec![SpectralState::zeros(N)];
    let exact = isps_envelope_from_cloud(cert, &origin)?;
    let sampled = undisturbed_attractor(&pr, 0.01)?;
    let approx = isps_envelope(cert, &sampled)?;
    let cfg = IntegratorConfig::default();
    let mut rng = rng_stream(6, 0);
    let mut violations = 0;
    for _ in 0..20 {
        let x0 = random_ball_point(&mut rng, N, 4.0);
        let u = random_step_signal(&mut rng, 1.0, 10.0, 8);
        let traj = solve(&pr.problem, &x0, &u, 10.0, &cfg)?;
        violations += check_envelope(&traj, &exact, &origin, u.sup_norm(), 1e-12)?
            .violations
            .len();
    }
    let c_zero = cert.c == Some(0.0) && exact.c == 0.0;
    let gamma0 = exact.gamma_bar.eval(0.0);
    outcome(
        c_zero && gamma0 == 0.0 && approx.c < 1e-12 && violations == 0,
        format!(
            "c = {}, gamma_bar(0) = {gamma0}, sampled c = {:.1e}, {violations} violations",
            exact.c, approx.c
        ),
    )
}

fn usc_trend() -> Result<Outcome> {
    let start = Instant::now();
    let pr = preset("chafee_infante_lambda2", PI, N)?;
    let u: StepSignal = USC_SIGNAL.parse()?;
    let cfg = UscConfig {
        attractor: AttractorConfig::from_decay_rate(pr.certificate.omega0, IntegratorConfig::with_dt(0.01))?,
        shifts: 8,
    };
    let curve = upper_semicontinuity_curve(&pr.problem, &u, &USC_AMPLITUDES, &pr.certificate, &cfg)?;
    let d: Vec<f64> = curve.rows.iter().map(|r| r.semidistance).collect();
    let target = (2.0 * EPS_CLUSTER).max(0.25 * d[0]);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        d[3] < target && secs < 600.0,
        format!(
            "semidistances {:.4} {:.4} {:.4} {:.4}, target {target:.4}, {secs:.1} s",
            d[0], d[1], d[2], d[3]
        ),
    )
}

fn gain_soundness(theta: &AttractorApprox) -> Result<Outcome> {
    let radii = [0.0, 0.125, 0.25, 0.5, 1.0];
    let pr = preset("chafee_infante_lambda2", PI, N)?;
    let horizon = 40.0 / pr.certificate.omega0;
    let cfg = GainConfig::default();
    let curve = estimate_gain_curve(&pr.problem, theta.points(), &radii, 16, horizon, &cfg)?;
    let s = &curve.samples;
    let zero_ok = s[0].1 <= EPS_CLUSTER;
    let monotone = s.windows(2).all(|w| w[1].1 + 2.0 * EPS_CLUSTER >= w[0].1);
    let m = &curve.majorant.function;
    let dominated = s.iter().all(|&(r, d)| {
        if r > 0.0 {
            m.eval(r) >= d
        } else {
            m.eval(r) + EPS_CLUSTER >= d
        }
    });

    let lin = preset("forced_linear", PI, N)?;
    let lin_theta = undisturbed_attractor(&lin, 0.01)?;
    let lambda1 = lin.problem.spectrum().lambda1();
    let lin_curve = estimate_gain_curve(
        &lin.problem,
        lin_theta.points(),
        &radii,
        16,
        40.0 / lin.certificate.omega0,
        &cfg,
    )?;
    let worst_rel = lin_curve.samples[1..]
        .iter()
        .map(|&(r, d)| (d - r / lambda1).abs() / (r / lambda1))
        .fold(0.0, f64::max);
    let samples: Vec<String> = s.iter().map(|(r, d)| format!("{r}:{d:.4}")).collect();
    outcome(
        zero_ok && monotone && dominated && worst_rel <= 0.1,
        format!(
            "delta_hat {}, forced-linear worst relative error {worst_rel:.2e}",
            samples.join(" ")
        ),
    )
}

fn refinement() -> Result<Outcome> {
    let coarse = preset("chafee_infante_lambda2", PI, N)?;
    let fine = preset("chafee_infante_lambda2", PI, 2 * N)?;
    let u: StepSignal = USC_SIGNAL.parse()?;
    let seeds = quasi_random_ball(N, 16, 3.0, 9);
    let run = |pr: &Preset, dt: f64| -> Result<(AttractorApprox, Vec<f64>)> {
        let modes = pr.problem.modes();
        let attractor = AttractorConfig {
            seeds: 0,
            extra_seeds: seeds.iter().map(|s| s.resized(modes)).collect(),
            ..AttractorConfig::from_decay_rate(pr.certificate.omega0, IntegratorConfig::with_dt(dt))?
        };
        let cfg = UscConfig { attractor, shifts: 4 };
        let curve = upper_semicontinuity_curve(&pr.problem, &u, &USC_AMPLITUDES, &pr.certificate, &cfg)?;
        Ok((curve.reference, curve.rows.iter().map(|r| r.semidistance).collect()))
    };
    let (theta_c, d_c) = run(&coarse, 0.01)?;
    let (theta_f, d_f) = run(&fine, 0.005)?;
    let lifted: Vec<SpectralState> = theta_c.points().iter().map(|x| x.resized(2 * N)).collect();
    let cross = hausdorff_semidist(&lifted, theta_f.points())?.max(hausdorff_semidist(theta_f.points(), &lifted)?);
    let worst = d_c.iter().zip(&d_f).map(|(a, b)| (a - b).abs()).fold(cross, f64::max);
    outcome(
        worst < EPS_CLUSTER,
        format!("Hausdorff(Theta_32, Theta_64) = {cross:.2e}, largest benchmark change {worst:.2e}"),
    )
}

fn report(id: usize, name: &str, r: Result<Outcome>) -> bool {
    match r {
        Ok(o) => {
            println!("{} {id} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            o.pass
        }
        Err(e) => {
            println!("FAIL {id} {name}: error: {e}");
            false
        }
    }
}

fn main() {
    let ci = preset("chafee_infante_lambda2", PI, N).and_then(|pr| undisturbed_attractor(&pr, 0.01));
    let with_theta = |f: fn(&AttractorApprox) -> Result<Outcome>| ci.clone().and_then(|theta| f(&theta));
    let results = [
        report(1, "equilibrium counts", equilibrium_counts()),
        report(2, "linear decay", linear_decay()),
        report(3, "cocycle suite", cocycle_suite()),
        report(4, "certificate validity", certificate_validity()),
        report(5, "envelope sweep", with_theta(envelope_sweep)),
        report(6, "ISS degeneration", iss_degeneration()),
        report(7, "upper-semicontinuity trend", usc_trend()),
        report(8, "gain curve soundness", with_theta(gain_soundness)),
        report(9, "refinement stability", refinement()),
    ];
    if results.contains(&false) {
        std::process::exit(1);
    }
}
