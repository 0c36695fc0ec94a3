use std::f64::consts::PI;

use isps_core::sampling::{random_smooth_state, random_step_signal, rng_stream};
use isps_core::semiflow::picard::{picard_endpoint, PicardConfig};
use isps_core::semiflow::{
    cocycle_residual, default_seeds, equilibria, flow, semiprocess, solve, EvolutionProblem, IntegratorConfig,
    NewtonConfig, Nonlinearity, Scheme,
};
use isps_core::signals::StepSignal;
use isps_core::spectral::{DirichletSpectrum, SpectralState};
use isps_core::Error;
use proptest::prelude::*;
use rand::RngExt;

fn problem(g: Nonlinearity, modes: usize, forced: bool) -> EvolutionProblem {
    let h = if forced {
        SpectralState::basis(modes, 1)
    } else {
        SpectralState::zeros(modes)
    };
    EvolutionProblem::new(DirichletSpectrum::new(PI, modes).unwrap(), g, h).unwrap()
}

fn smooth_state(seed: u64, modes: usize, scale: f64) -> SpectralState {
    random_smooth_state(&mut rng_stream(seed, 7), modes, scale)
}

#[test]
fn linear_part_is_exact() {
    let p = problem(Nonlinearity::zero(), 8, false);
    let end = flow(
        &p,
        &SpectralState::basis(8, 1),
        &StepSignal::zero(),
        1.0,
        &IntegratorConfig::default(),
    )
    .unwrap();
    assert!((end.coefficients()[0] - (-1.0f64).exp()).abs() < 1e-12);
    assert!(end.coefficients()[1..].iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn forced_mode_is_exact() {
    let p = problem(Nonlinearity::zero(), 8, true);
    for t in [0.37, 1.0, 4.2] {
        for scheme in [Scheme::ExpEuler, Scheme::Etdrk4] {
            let cfg = IntegratorConfig {
                scheme,
                ..IntegratorConfig::with_dt(0.05)
            };
            let end = flow(&p, &SpectralState::zeros(8), &StepSignal::constant(1.0), t, &cfg).unwrap();
            assert!(
                (end.coefficients()[0] - (1.0 - (-t).exp())).abs() < 1e-12,
                "{t} {scheme:?}"
            );
        }
    }
}

#[test]
fn solution_matches_picard_oracle() {
    let p = problem(Nonlinearity::chafee_infante(2.0), 16, true);
    let u = StepSignal::from_steps(&[(0.25, 0.4), (0.6, -0.3)], 0.2).unwrap();
    for seed in 0..3 {
        let x0 = smooth_state(seed, 16, 1.2);
        let cfg = IntegratorConfig {
            picard_oracle: true,
            ..IntegratorConfig::with_dt(0.01)
        };
        let traj = solve(&p, &x0, &u, 1.0, &cfg).unwrap();
        let d = traj.oracle_discrepancy.unwrap();
        assert!(d < 1e-6, "seed {seed}: {d}");
    }
}

#[test]
fn etdrk4_converges_at_fourth_order() {
    let p = problem(Nonlinearity::chafee_infante(2.0), 16, true);
    let x0 = smooth_state(11, 16, 1.5);
    let u = StepSignal::from_steps(&[(0.4, 0.5)], -0.25).unwrap();
    let reference = picard_endpoint(&p, &x0, &u, 1.6, &PicardConfig::default()).unwrap();
    let err = |scheme, dt| {
        let cfg = IntegratorConfig {
            scheme,
            ..IntegratorConfig::with_dt(dt)
        };
        flow(&p, &x0, &u, 1.6, &cfg).unwrap().distance(&reference)
    };
    let (e1, e2) = (err(Scheme::Etdrk4, 0.2), err(Scheme::Etdrk4, 0.1));
    assert!(e1 / e2 >= 3.5 * 2.0 && e2 > 0.0, "{e1} {e2}");
    let (f1, f2) = (err(Scheme::ExpEuler, 0.02), err(Scheme::ExpEuler, 0.01));
    assert!(f1 / f2 >= 1.8, "{f1} {f2}");
}

#[test]
fn blow_up_ceiling_is_reported() {
    let p = problem(Nonlinearity::pointwise(vec![0.0, 0.0, 0.0, 1.0]), 4, false);
    let cfg = IntegratorConfig {
        ceiling: 1e3,
        ..IntegratorConfig::with_dt(0.001)
    };
    let r = flow(
        &p,
        &SpectralState::basis(4, 1).scaled(5.0),
        &StepSignal::zero(),
        2.0,
        &cfg,
    );
    assert!(matches!(r, Err(Error::FiniteEscape { .. })), "{r:?}");
}

#[test]
fn zero_input_zero_state_stays_zero() {
    let p = problem(Nonlinearity::chafee_infante(2.0), 16, true);
    let traj = solve(
        &p,
        &SpectralState::zeros(16),
        &StepSignal::zero(),
        5.0,
        &IntegratorConfig::default(),
    )
    .unwrap();
    assert!(traj.states.iter().all(|x| x.norm() < 1e-12));
}

#[test]
fn semiprocess_examples() {
    let p = problem(Nonlinearity::chafee_infante(2.0), 8, true);
    let cfg = IntegratorConfig::default();
    let u = StepSignal::from_steps(&[(0.5, 0.3), (1.1, -0.2)], 0.1).unwrap();
    let x = smooth_state(3, 8, 1.0);
    assert_eq!(semiprocess(&p, 1.5, 1.5, &x, &u, &cfg).unwrap(), x);
    assert_eq!(
        semiprocess(&p, 1.5, 0.0, &x, &u, &cfg).unwrap(),
        flow(&p, &x, &u, 1.5, &cfg).unwrap()
    );
    assert!(semiprocess(&p, 1.0, 2.0, &x, &u, &cfg).is_err());
    let mut rng = rng_stream(5, 1);
    for _ in 0..10 {
        let r = (rng.random::<f64>() * 1000.0).round() / 1000.0;
        let s = r + (rng.random::<f64>() * 1000.0).round() / 1000.0;
        let t = s + (rng.random::<f64>() * 1000.0).round() / 1000.0;
        let mid = semiprocess(&p, s, r, &x, &u, &cfg).unwrap();
        let composed = semiprocess(&p, t, s, &mid, &u, &cfg).unwrap();
        let direct = semiprocess(&p, t, r, &x, &u, &cfg).unwrap();
        assert!(composed.distance(&direct) < 1e-8, "{r} {s} {t}");
    }
}

#[test]
fn cocycle_examples() {
    let p = problem(Nonlinearity::chafee_infante(2.0), 16, true);
    let cfg = IntegratorConfig::default();
    let x0 = smooth_state(9, 16, 1.0);
    let u = StepSignal::from_steps(&[(0.3, 0.5), (0.75, -0.4)], 0.2).unwrap();
    assert_eq!(cocycle_residual(&p, &x0, &u, 1.3, 0.0, &cfg).unwrap(), 0.0);
    assert!(cocycle_residual(&p, &x0, &StepSignal::zero(), 0.777, 1.234, &cfg).unwrap() < 1e-10);
    let mut rng = rng_stream(17, 3);
    for _ in 0..20 {
        let u = random_step_signal(&mut rng, 0.5, 3.0, 5);
        let x0 = smooth_state(rng.random::<u64>(), 16, 1.5);
        assert!(cocycle_residual(&p, &x0, &u, 1.0, 1.0, &cfg).unwrap() < 1e-8);
        let t = (rng.random::<f64>() * 2000.0).round() / 1000.0;
        let h = (rng.random::<f64>() * 2000.0).round() / 1000.0;
        let r = cocycle_residual(&p, &x0, &u, t, h, &cfg).unwrap();
        assert!(r < 1e-8, "t = {t}, h = {h}: {r}");
    }
}

#[test]
fn causality() {
    let p = problem(Nonlinearity::chafee_infante(2.0), 16, true);
    let cfg = IntegratorConfig::default();
    let x0 = smooth_state(4, 16, 1.0);
    let a = StepSignal::from_steps(&[(0.5, 0.3), (1.0, -0.2)], 0.0).unwrap();
    let b = StepSignal::from_steps(&[(0.5, 0.3), (1.0, -0.2), (3.0, 5.0)], -1.0).unwrap();
    assert_eq!(
        flow(&p, &x0, &a, 1.0, &cfg).unwrap(),
        flow(&p, &x0, &b, 1.0, &cfg).unwrap()
    );
}

#[test]
fn equilibrium_counts() {
    for (lambda, count) in [(0.5, 1), (2.0, 3), (10.0, 7)] {
        let p = problem(Nonlinearity::chafee_infante(lambda), 16, false);
        let rep = equilibria(&p, &default_seeds(16), &NewtonConfig::default()).unwrap();
        assert_eq!(rep.roots.len(), count, "lambda = {lambda}");
        assert!(rep.roots.iter().any(|r| r.norm() < 1e-12));
        assert!(rep.residuals.iter().all(|r| *r <= 1e-10));
    }
    let p = problem(Nonlinearity::chafee_infante(2.0), 8, false);
    assert!(equilibria(&p, &[], &NewtonConfig::default()).is_err());
}

#[test]
fn seeds_on_equilibria_converge_immediately() {
    let p = problem(Nonlinearity::chafee_infante(2.0), 16, false);
    let rep = equilibria(&p, &default_seeds(16), &NewtonConfig::default()).unwrap();
    let again = equilibria(&p, &rep.roots, &NewtonConfig::default()).unwrap();
    assert_eq!(again.roots, rep.roots);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn odd_nonlinearity_commutes_with_sign(seed in any::<u64>(), t in 0.1f64..2.0) {
        let p = problem(Nonlinearity::chafee_infante(2.0), 16, true);
        let cfg = IntegratorConfig::default();
        let mut rng = rng_stream(seed, 0);
        let u = random_step_signal(&mut rng, 0.5, 2.0, 4);
        let x0 = smooth_state(seed, 16, 1.5);
        let plus = flow(&p, &x0, &u, t, &cfg).unwrap();
        let minus = flow(&p, &x0.scaled(-1.0), &u.scaled(-1.0), t, &cfg).unwrap();
        prop_assert!(plus.add(&minus).norm() < 1e-10);
    }

    #[test]
    fn trajectory_samples_on_dt_grid(t_end in 0.001f64..1.0) {
        let p = problem(Nonlinearity::zero(), 4, false);
        let traj = solve(&p, &SpectralState::basis(4, 2), &StepSignal::zero(), t_end, &IntegratorConfig::default()).unwrap();
        let n = traj.times.len();
        prop_assert!((traj.times[n - 1] - t_end).abs() < 1e-9);
        for w in traj.times.windows(2) {
            prop_assert!(w[1] - w[0] <= 0.01 + 1e-12);
        }
        let exact = (-4.0 * traj.times[n - 1]).exp();
        prop_assert!((traj.endpoint().coefficients()[1] - exact).abs() < 1e-12);
    }
}
