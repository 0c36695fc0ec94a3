use std::f64::consts::PI;

use isps_core::spectral::{dist_point_to_cloud, DirichletSpectrum, GridFunction, SineTransform, SpectralState};
use proptest::prelude::*;

fn state(n: usize) -> impl Strategy<Value = SpectralState> {
    prop::collection::vec(-2.0f64..2.0, n).prop_map(SpectralState::new)
}

fn direct_synthesis(x: &SpectralState, length: f64, grid: usize) -> Vec<f64> {
    let h = length / (grid + 1) as f64;
    (1..=grid)
        .map(|j| {
            x.coefficients()
                .iter()
                .enumerate()
                .map(|(k, a)| a * (2.0 / length).sqrt() * ((k + 1) as f64 * PI * j as f64 * h / length).sin())
                .sum()
        })
        .collect()
}

#[test]
fn eigenvalue_examples() {
    let s = DirichletSpectrum::new(PI, 3).unwrap();
    for (got, want) in s.eigenvalues().iter().zip([1.0, 4.0, 9.0]) {
        assert!((got - want).abs() < 1e-14);
    }
    assert!((DirichletSpectrum::new(1.0, 1).unwrap().lambda1() - PI * PI).abs() < 1e-13);
    assert!((DirichletSpectrum::new(2.0 * PI, 2).unwrap().eigenvalues()[1] - 1.0).abs() < 1e-14);
    assert!(DirichletSpectrum::new(0.0, 3).is_err());
    assert!(DirichletSpectrum::new(PI, 0).is_err());
}

#[test]
fn semigroup_examples() {
    let s = DirichletSpectrum::new(PI, 4).unwrap();
    let e1 = SpectralState::basis(4, 1);
    let y = s.semigroup_apply(&e1, 1.0).unwrap();
    assert!((y.coefficients()[0] - (-1.0f64).exp()).abs() < 1e-15);
    assert!(y.coefficients()[1..].iter().all(|&v| v == 0.0));
    assert_eq!(s.semigroup_apply(&e1, 0.0).unwrap(), e1);
    assert!(s.semigroup_apply(&e1, -1.0).is_err());
}

#[test]
fn basis_grid_values() {
    let t = SineTransform::new(PI, 3, 8).unwrap();
    let g = t.synthesize(&SpectralState::basis(3, 1)).unwrap();
    let h = PI / 9.0;
    for (j, v) in g.values.iter().enumerate() {
        let want = (2.0 / PI).sqrt() * ((j + 1) as f64 * h).sin();
        assert!((v - want).abs() < 1e-14);
    }
    let back = t.analyze(&g).unwrap();
    assert!(back.distance(&SpectralState::basis(3, 1)) < 1e-10);
    let zero = t.synthesize(&SpectralState::zeros(3)).unwrap();
    assert!(zero.values.iter().all(|&v| v == 0.0));
    assert_eq!(t.analyze(&zero).unwrap(), SpectralState::zeros(3));
}

#[test]
fn aliasing_grid_rejected() {
    assert!(SineTransform::new(PI, 8, 7).is_err());
    assert!(SineTransform::new(PI, 8, 8).is_ok());
}

#[test]
fn norm_and_distance_examples() {
    assert_eq!(SpectralState::new(vec![3.0, 4.0]).norm(), 5.0);
    let x = SpectralState::new(vec![2.0, 0.0]);
    assert_eq!(dist_point_to_cloud(&x, std::slice::from_ref(&x)).unwrap(), 0.0);
    let cloud = [SpectralState::zeros(2), SpectralState::new(vec![5.0, 0.0])];
    assert_eq!(dist_point_to_cloud(&x, &cloud).unwrap(), 2.0);
    assert!(dist_point_to_cloud(&x, &[]).is_err());
}

#[test]
fn grid_integral_of_basis_square() {
    let t = SineTransform::new(PI, 4, 63).unwrap();
    let g = t.synthesize(&SpectralState::basis(4, 3)).unwrap();
    let sq = GridFunction {
        length: g.length,
        values: g.values.iter().map(|v| v * v).collect(),
    };
    assert!((sq.integral() - 1.0).abs() < 1e-12);
}

proptest! {
    #[test]
    fn fast_transform_matches_direct_sums(x in state(16)) {
        let t = SineTransform::new(PI, 16, 64).unwrap();
        let fast = t.synthesize(&x).unwrap();
        let direct = direct_synthesis(&x, PI, 64);
        for (a, b) in fast.values.iter().zip(&direct) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let back = t.analyze(&fast).unwrap();
        prop_assert!(back.distance(&x) < 1e-10);
    }

    #[test]
    fn parseval_round_trip(n in 1usize..=64, seed in prop::collection::vec(-1.0f64..1.0, 64), length in 0.5f64..7.0) {
        let x = SpectralState::new(seed[..n].to_vec());
        for grid in [4 * n, SineTransform::default_grid(n)] {
            let t = SineTransform::new(length, n, grid).unwrap();
            let y = t.analyze(&t.synthesize(&x).unwrap()).unwrap();
            prop_assert!((y.norm() - x.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn semigroup_law(x in state(12), s in 0.0f64..3.0, t in 0.0f64..3.0, length in 0.5f64..6.0) {
        let sp = DirichletSpectrum::new(length, 12).unwrap();
        let two = sp.semigroup_apply(&sp.semigroup_apply(&x, t).unwrap(), s).unwrap();
        let one = sp.semigroup_apply(&x, s + t).unwrap();
        for (a, b) in two.coefficients().iter().zip(one.coefficients()) {
            prop_assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn semigroup_contracts(x in state(10), t in 0.0f64..4.0) {
        let sp = DirichletSpectrum::new(PI, 10).unwrap();
        let y = sp.semigroup_apply(&x, t).unwrap();
        let rate = (-sp.lambda1() * t).exp();
        prop_assert!(y.norm() <= rate * x.norm() * (1.0 + 1e-14));
        for (k, (a, b)) in y.coefficients().iter().zip(x.coefficients()).enumerate() {
            let want = (-(((k + 1) as f64).powi(2)) * t).exp() * b;
            prop_assert!((a - want).abs() <= 1e-15 * (1.0 + b.abs()));
        }
    }
}
