use berkson_core::bandwidth::*;
use berkson_core::DeconvError;
use berkson_core::risk::{BoundParams, CaseId};
use berkson_core::spectral::SmoothnessEnvelope;
use berkson_core::suite::{scenario_matrix, SigmaRegime};
use proptest::prelude::*;

fn env(poly: f64, exp: f64, scale: f64) -> SmoothnessEnvelope {
    SmoothnessEnvelope::shape(poly, exp, scale).unwrap()
}

#[test]
fn decisions_follow_their_branch() {
    for e in scenario_matrix().unwrap() {
        let p = e.params();
        let d = optimal_bandwidth(&p).unwrap();
        assert_eq!(d.case, e.case);
        assert_eq!(d.branch, branch_for(d.case, p.sigma, d.threshold));
        let expect_above = e.regime == SigmaRegime::Above;
        assert_eq!(d.branch == ThresholdBranch::AboveThreshold, expect_above, "{} {:?}", e.case, e.regime);
        assert!(d.h_opt >= 0.0 && d.h_opt < 1.0);
        assert!(d.predicted_delta > 0.0);
    }
}

#[test]
fn grid_search_never_beats_itself() {
    for e in scenario_matrix().unwrap() {
        let p = e.params();
        let grid = default_h_grid(&p);
        let best = grid_search_bandwidth(&p, &grid).unwrap();
        assert!(grid.contains(&best.h_star));
        assert!(best.bound.total.is_finite());
    }
}

proptest! {
    #[test]
    fn ordinary_smooth_oracle_structure(a in 0.5f64..3.0, log_n in 5.0f64..30.0, u in 0.0f64..1.0) {
        // case IV: h_opt is 0 above n^(-1/(2k+2a+1)) and the threshold itself below
        let n = log_n.exp();
        let thr = n.powf(-1.0 / (2.0 + 2.0 * a + 1.0));
        let sigma = thr * (0.1 + 9.9 * u).min(0.9 / thr);
        let p = BoundParams::new(n, sigma, 1.0, env(a, 0.0, 0.0), env(1.0, 2.0, 0.5)).unwrap();
        prop_assume!(p.case() == CaseId::IV);
        let d = optimal_bandwidth(&p).unwrap();
        if sigma > thr {
            prop_assert_eq!(d.h_opt, 0.0);
        } else {
            prop_assert!((d.h_opt / thr - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mu1_decreases_with_n(log_n in 8.0f64..40.0, b in 0.5f64..2.0, a in 0.0f64..2.0) {
        let n = log_n.exp();
        let m1 = match mu1(n, a, b, 0.5, 1.0) {
            Ok(m) => m,
            Err(DeconvError::BelowAsymptoticRegime { n: got, min_n }) => {
                prop_assert!(got < min_n);
                return Ok(());
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let m2 = mu1(n * 10.0, a, b, 0.5, 1.0).unwrap();
        prop_assert!(m2 < m1);
    }
}

#[test]
fn case_v_prediction_improves_with_n() {
    // σ fixed above μ₁ for every n in the sweep
    let xi = env(0.0, 1.0, 1.0);
    let g = env(0.0, 2.0, 0.5);
    let mut prev = f64::INFINITY;
    for n in [1e4, 1e5, 1e6, 1e8, 1e10] {
        let p = BoundParams::new(n, 0.45, 1.0, xi, g).unwrap();
        assert_eq!(p.case(), CaseId::V);
        let d = optimal_bandwidth(&p).unwrap();
        assert_eq!(d.branch, ThresholdBranch::AboveThreshold, "n = {n}");
        assert!(d.predicted_delta <= prev);
        prev = d.predicted_delta;
    }
}

#[test]
fn log_grid_endpoints() {
    let g = log_grid(1e-4, 1.0, 200);
    assert_eq!(g.len(), 200);
    assert!((g[0] - 1e-4).abs() < 1e-18 && (g[199] - 1.0).abs() < 1e-12);
    assert!(g.windows(2).all(|w| w[1] > w[0]));
}
