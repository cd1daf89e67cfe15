use std::f64::consts::PI;

use berkson_core::quad::integrate;
use berkson_core::spectral::*;
use proptest::prelude::*;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![
        (0.05f64..5.0).prop_map(|scale| Family::Gaussian { scale }),
        (0.05f64..5.0).prop_map(|scale| Family::Laplace { scale }),
        (0.05f64..5.0, 0.2f64..4.0).prop_map(|(scale, order)| Family::SymmetricGamma { scale, order }),
        (0.05f64..3.0, 0.2f64..2.0).prop_map(|(scale, exponent)| Family::ExpPower { scale, exponent }),
    ]
}

proptest! {
    #[test]
    fn cf_is_a_characteristic_function(f in family(), s in -200.0f64..200.0) {
        let m = CharacteristicModel::new(f).unwrap();
        prop_assert_eq!(cf_eval(&m, 0.0).re, 1.0);
        let v = cf_eval(&m, s);
        prop_assert!(v.norm() <= 1.0 + 1e-15);
        prop_assert!((cf_eval(&m, -s) - v.conj()).norm() < 1e-15);
    }

    #[test]
    fn envelope_brackets_on_audit_grid(f in family()) {
        let m = CharacteristicModel::new(f).unwrap();
        prop_assert!(!m.envelope_exempt());
        prop_assert!(m.envelope_brackets(audit_grid(), 1e-12));
        prop_assert!(m.envelope().c_lower <= m.envelope().c_upper);
    }

    #[test]
    fn sobolev_closed_forms(scale in 0.2f64..4.0) {
        // ∫ (1 + λ² s²)^{-2} ds = π / (2λ);  ∫ exp(-λ² s²) ds = sqrt(π) / λ
        let lap = sobolev_norm_sq(&CharacteristicModel::new(Family::Laplace { scale }).unwrap(), 0.0);
        prop_assert!((lap / (PI / (2.0 * scale)) - 1.0).abs() < 1e-6);
        let gau = sobolev_norm_sq(&CharacteristicModel::new(Family::Gaussian { scale }).unwrap(), 0.0);
        prop_assert!((gau / (PI.sqrt() / scale) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn identity_is_envelope_exempt() {
    let m = CharacteristicModel::new(Family::Identity).unwrap();
    assert!(m.envelope_exempt());
    assert_eq!(cf_eval(&m, 17.0).re, 1.0);
    assert!(m.density(0.0).is_none());
}

#[test]
fn sobolev_divergence_from_exponents() {
    let lap = CharacteristicModel::new(Family::Laplace { scale: 1.0 }).unwrap();
    assert!(sobolev_norm_sq(&lap, 2.0).is_infinite());
    assert!(sobolev_norm_sq(&lap, 1.49).is_finite());
}

/// Brute-force probe over dyadic shells `[T, 2T]` of `|ratio|²`. A convergent
/// integrand has shell masses that shrink by at least a fixed factor; a
/// logarithmic or worse divergence keeps them flat or growing.
fn probe_diverges(s: &Scenario) -> bool {
    let f = |w: f64| s.blur_ratio(w).norm_sqr();
    let shell = |t: f64| integrate(f, t, 2.0 * t, 0.0, 1e-8, 2000).value;
    let (a, b) = (shell(400.0), shell(800.0));
    !b.is_finite() || b > 0.75 * a
}

#[test]
fn rho_classification_matches_probe() {
    let sob = SobolevSpec::new(1.0, 2.0).unwrap();
    let x = Family::Gaussian { scale: 1.0 };
    let lap = Family::Laplace { scale: 1.0 };
    let gauss = |scale| Family::Gaussian { scale };
    let stable = |scale, exponent| Family::ExpPower { scale, exponent };
    let sg = |order| Family::SymmetricGamma { scale: 1.0, order };
    // the eight (b, β) patterns of the case table, σ = 0.15
    let combos = [
        (lap, sg(1.5)),               // b = β = 0, α > a + 1/2
        (lap, sg(1.25)),              // b = β = 0, α = a + 1/2
        (lap, lap),                   // b = β = 0, α < a + 1/2
        (lap, gauss(1.0)),            // b = 0, β > 0
        (stable(0.2, 1.0), gauss(1.0)), // β > b > 0
        (gauss(0.4), gauss(1.0)),     // b = β > 0
        (gauss(0.4), lap),            // b > 0, β = 0
        (gauss(0.4), stable(0.5, 1.0)), // b > β > 0
    ];
    for (xi, g) in combos {
        let s = Scenario::from_families(100, 0.15, x, xi, g, sob).unwrap();
        let analytic = rho_squared(&s).is_finite();
        assert_eq!(analytic, !probe_diverges(&s), "{xi:?} / {g:?}");
    }
}

#[test]
fn rho_squared_examples() {
    let sob = SobolevSpec::new(1.0, 2.0).unwrap();
    let x = Family::Gaussian { scale: 1.0 };
    let lap = Family::Laplace { scale: 1.0 };
    let gauss = Family::Gaussian { scale: 1.0 };
    let s = Scenario::from_families(100, 0.5, x, lap, gauss, sob).unwrap();
    assert!(rho_squared(&s).is_finite());
    let s = Scenario::from_families(100, 0.1, x, gauss, lap, sob).unwrap();
    assert!(matches!(rho_squared(&s), RhoSquared::Infinite(_)));
    let s = Scenario::from_families(100, 0.5, x, lap, lap, sob).unwrap();
    assert!(matches!(rho_squared(&s), RhoSquared::Infinite(_)));
}
