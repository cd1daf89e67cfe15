use std::f64::consts::PI;

use berkson_core::estimator::*;
use berkson_core::montecarlo::sample_y;
use berkson_core::quad::{integrate, trapezoid};
use berkson_core::spectral::{Family, Scenario, SobolevSpec};
use berkson_core::suite::mc_template;
use num_complex::Complex64;
use proptest::prelude::*;

fn laplace_gauss(n: u64, sigma: f64) -> Scenario {
    Scenario::from_families(
        n,
        sigma,
        Family::Gaussian { scale: 1.0 },
        Family::Laplace { scale: 1.0 },
        Family::Gaussian { scale: 1.0 },
        SobolevSpec::new(1.0, 2.0).unwrap(),
    )
    .unwrap()
}

fn small_grid() -> GridSpec {
    GridSpec::new(-8.0, 8.0, 257, 200.0, 1024).unwrap()
}

#[test]
fn identity_error_reduces_to_kernel_smoother() {
    let s = Scenario::from_families(
        50,
        0.4,
        Family::Gaussian { scale: 1.0 },
        Family::Identity,
        Family::Gaussian { scale: 1.0 },
        SobolevSpec::new(1.0, 2.0).unwrap(),
    )
    .unwrap();
    let y = sample_y(&s, 5, 0);
    let grid = GridSpec::new(-8.0, 8.0, 161, 200.0, 4096).unwrap();
    let est = estimate(&y, &s, 0.0, &grid).unwrap();
    for (i, v) in est.values.iter().enumerate() {
        let x = grid.x(i);
        let direct = y.iter().map(|yj| s.berkson_density(x - yj).unwrap()).sum::<f64>() / y.len() as f64;
        assert!((v - direct).abs() < 1e-6, "x = {x}: {v} vs {direct}");
    }
}

#[test]
fn sinc_estimate_matches_direct_quadrature() {
    let s = laplace_gauss(200, 0.5);
    let y = sample_y(&s, 11, 3);
    let h = 0.3;
    let grid = GridSpec::new(-6.0, 6.0, 25, 200.0, 2048).unwrap();
    let est = estimate(&y, &s, h, &grid).unwrap();
    for (i, v) in est.values.iter().enumerate() {
        let x = grid.x(i);
        let integrand = |w: f64| {
            let phi = ecf(&y, w).unwrap();
            (Complex64::from_polar(1.0, -w * x) * phi * s.blur_ratio(w)).re
        };
        let q = integrate(integrand, 0.0, 1.0 / h, 1e-12, 1e-12, 4000);
        let oracle = q.value / PI;
        assert!((v - oracle).abs() < 1e-5, "x = {x}: {v} vs {oracle}");
    }
}

#[test]
fn plancherel_identity() {
    let s = laplace_gauss(300, 0.5);
    let y = sample_y(&s, 2, 0);
    let h = 0.4;
    let grid = GridSpec::new(-400.0, 400.0, 40001, 200.0, 1024).unwrap();
    let est = estimate(&y, &s, h, &grid).unwrap();
    let sq: Vec<f64> = est.values.iter().map(|v| v * v).collect();
    let space = trapezoid(&sq, grid.dx());
    let freq = integrate(
        |w: f64| (ecf(&y, w).unwrap() * s.blur_ratio(w)).norm_sqr(),
        0.0,
        1.0 / h,
        1e-12,
        1e-12,
        4000,
    )
    .value
        / PI;
    assert!((space / freq - 1.0).abs() < 1e-4, "{space} vs {freq}");
}

#[test]
fn band_inversions_add_up() {
    let s = laplace_gauss(100, 0.5);
    let y = sample_y(&s, 9, 1);
    let grid = small_grid();
    let whole = band_inversion(&y, &s, 0.0, 4.0, &grid).unwrap();
    let low = band_inversion(&y, &s, 0.0, 1.5, &grid).unwrap();
    let high = band_inversion(&y, &s, 1.5, 4.0, &grid).unwrap();
    for i in 0..grid.x_points {
        let sum = low.values[i] + high.values[i];
        assert!((whole.values[i] - sum).abs() < 1e-6);
    }
}

#[test]
fn replicate_average_approaches_band_limited_target() {
    let s = mc_template(400, 0.3).unwrap();
    let h = 0.5;
    let grid = small_grid();
    let target = band_limited_fw(&s, h, &grid).unwrap();
    let reps = 64;
    let mut mean = vec![0.0; grid.x_points];
    let mut spread = 0.0;
    for r in 0..reps {
        let est = estimate(&sample_y(&s, 21, r), &s, h, &grid).unwrap();
        spread += ise(&est, &target).unwrap() / reps as f64;
        for (m, v) in mean.iter_mut().zip(&est.values) {
            *m += v / reps as f64;
        }
    }
    let avg = DensityEstimate { values: mean, ..target.clone() };
    let err = ise(&avg, &target).unwrap();
    // variance of the mean is spread / reps; allow a generous multiple
    assert!(err < 4.0 * spread / reps as f64, "{err} vs {spread}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetric_samples_give_even_estimate(half in prop::collection::vec(-4.0f64..4.0, 1..40), h in 0.2f64..1.0) {
        let s = laplace_gauss(100, 0.5);
        let y: Vec<f64> = half.iter().flat_map(|v| [*v, -*v]).collect();
        let grid = GridSpec::new(-8.0, 8.0, 129, 200.0, 256).unwrap();
        let est = estimate(&y, &s, h, &grid).unwrap();
        let m = grid.x_points;
        for i in 0..m {
            prop_assert!((est.values[i] - est.values[m - 1 - i]).abs() < 1e-9);
        }
    }

    #[test]
    fn estimate_ignores_sample_order(mut y in prop::collection::vec(-5.0f64..5.0, 2..60), h in 0.2f64..1.0, rot in 0usize..60) {
        let s = laplace_gauss(100, 0.5);
        let grid = GridSpec::new(-8.0, 8.0, 65, 200.0, 256).unwrap();
        let a = estimate(&y, &s, h, &grid).unwrap();
        let k = rot % y.len();
        y.rotate_left(k);
        y.reverse();
        let b = estimate(&y, &s, h, &grid).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            prop_assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn ecf_bounded_and_hermitian(y in prop::collection::vec(-50.0f64..50.0, 1..50), w in -30.0f64..30.0) {
        let a = ecf(&y, w).unwrap();
        prop_assert!(a.norm() <= 1.0 + 1e-12);
        prop_assert!((ecf(&y, -w).unwrap() - a.conj()).norm() < 1e-12);
        prop_assert_eq!(ecf(&y, 0.0).unwrap(), Complex64::new(1.0, 0.0));
    }
}
