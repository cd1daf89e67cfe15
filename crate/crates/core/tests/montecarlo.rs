use berkson_core::bandwidth::optimal_bandwidth;
use berkson_core::estimator::{true_fw, GridSpec};
use berkson_core::montecarlo::*;
use berkson_core::risk::BoundParams;
use berkson_core::suite::mc_template;

fn grid() -> GridSpec {
    GridSpec::new(-10.0, 10.0, 257, 200.0, 512).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_independent_of_thread_count() {
    let s = mc_template(300, 0.4).unwrap();
    let g = grid();
    let one = in_pool(1, || mc_mise(&s, 0.3, &g, 24, 17).unwrap());
    let three = in_pool(3, || mc_mise(&s, 0.3, &g, 24, 17).unwrap());
    assert_eq!(one.mean_ise.to_bits(), three.mean_ise.to_bits());
    assert_eq!(one.std_error.to_bits(), three.std_error.to_bits());
}

#[test]
fn replications_look_independent() {
    let s = mc_template(200, 0.4).unwrap();
    let g = grid();
    let target = true_fw(&s, &g).unwrap();
    let reps = 200;
    let idx: Vec<u64> = (0..reps).collect();
    let v = replicate_ise(&s, 0.3, &g, &target, &idx, 3).unwrap();
    let rho = lag1_autocorrelation(&v);
    assert!(rho.abs() < 4.0 / (reps as f64).sqrt(), "lag-1 autocorrelation {rho}");
}

#[test]
fn doubling_reps_is_consistent() {
    let s = mc_template(300, 0.4).unwrap();
    let g = grid();
    let a = mc_mise(&s, 0.3, &g, 50, 8).unwrap();
    let b = mc_mise(&s, 0.3, &g, 100, 8).unwrap();
    let spread = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean_ise - b.mean_ise).abs() < 4.0 * spread);
    assert!(b.std_error < a.std_error * 1.1);
}

#[test]
fn larger_samples_give_smaller_error() {
    let g = grid();
    let small = mc_template(1_000, 0.3).unwrap();
    let large = mc_template(100_000, 0.3).unwrap();
    let h_small = HRule::Oracle.resolve(&small).unwrap();
    let h_large = HRule::Oracle.resolve(&large).unwrap();
    let a = mc_mise(&small, h_small, &g, 20, 1).unwrap();
    let b = mc_mise(&large, h_large, &g, 20, 1).unwrap();
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!(a.mean_ise - b.mean_ise > 2.0 * se, "{} vs {}", b.mean_ise, a.mean_ise);
}

#[test]
fn direct_estimator_loses_below_threshold() {
    let g = grid();
    let n = 2_000;
    let s = mc_template(n, 0.05).unwrap();
    let d = optimal_bandwidth(&BoundParams::from_scenario(&s)).unwrap();
    assert!(d.h_opt > 0.0);
    let zero = mc_mise(&s, 0.0, &g, 30, 4).unwrap();
    let oracle = mc_mise(&s, d.h_opt, &g, 30, 4).unwrap();
    assert!(oracle.mean_ise < zero.mean_ise, "{} vs {}", oracle.mean_ise, zero.mean_ise);
}

#[test]
fn monte_carlo_tracks_exact_mise() {
    let s = mc_template(500, 0.4).unwrap();
    let g = grid();
    for h in [0.2, 0.5] {
        let mc = mc_mise(&s, h, &g, 200, 12).unwrap();
        let exact = exact_mise(&s, h).unwrap().total;
        assert!((mc.mean_ise - exact).abs() < 4.0 * mc.std_error + 1e-3 * exact, "h = {h}: {} vs {exact}", mc.mean_ise);
    }
}

#[test]
fn rate_fit_recovers_slope() {
    let pts: Vec<(f64, f64)> = [1e2, 1e3, 1e4].iter().map(|n: &f64| (n.ln(), 2.0 - 0.8 * n.ln())).collect();
    let fit = fit_loglog(&pts).unwrap();
    assert!((fit.slope + 0.8).abs() < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12);
}
