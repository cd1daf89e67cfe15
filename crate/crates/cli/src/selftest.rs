//! Closed-form and trivial examples, checked end to end.

use std::f64::consts::PI;

use berkson_core::bandwidth::{mu1, optimal_bandwidth};
use berkson_core::estimator::{ecf, true_fw, GridSpec};
use berkson_core::montecarlo::{fit_loglog, sample_x, sample_y};
use berkson_core::quad::trapezoid;
use berkson_core::risk::{bias_bound, kappa, solve_exp_eq, BoundParams};
use berkson_core::spectral::{
    cf_eval, rho_squared, sobolev_norm_sq, CharacteristicModel, Family, RhoSquared, Scenario, SmoothnessEnvelope,
    SobolevSpec,
};
use berkson_core::Result;

use crate::error::CliError;

type Check = fn() -> Result<Option<String>>;

fn close(name: &str, got: f64, want: f64, tol: f64) -> Option<String> {
    ((got - want).abs() > tol).then(|| format!("{name}: got {got}, want {want} (tol {tol})"))
}

fn model(f: Family) -> Result<CharacteristicModel> {
    CharacteristicModel::new(f)
}

fn scenario(n: u64, sigma: f64, xi: Family, g: Family) -> Result<Scenario> {
    Scenario::from_families(n, sigma, Family::Gaussian { scale: 1.0 }, xi, g, SobolevSpec::new(1.0, 2.0)?)
}

fn env(poly: f64, exp: f64, scale: f64) -> Result<SmoothnessEnvelope> {
    SmoothnessEnvelope::shape(poly, exp, scale)
}

const CHECKS: &[(&str, Check)] = &[
    ("cf values", || {
        let g = cf_eval(&model(Family::Gaussian { scale: 1.0 })?, 0.0);
        let l = cf_eval(&model(Family::Laplace { scale: 1.0 })?, 2.0).re;
        let e = cf_eval(&model(Family::ExpPower { scale: 1.0, exponent: 1.0 })?, 3.0).re;
        Ok(close("gaussian cf(0)", g.re, 1.0, 0.0)
            .or(close("gaussian cf(0) imag", g.im, 0.0, 0.0))
            .or(close("laplace cf(2)", l, 0.2, 1e-15))
            .or(close("stable cf(3)", e, (-3.0f64).exp(), 1e-15)))
    }),
    ("rho^2 of equal Laplace blur is infinite", || {
        let lap = Family::Laplace { scale: 1.0 };
        Ok(match rho_squared(&scenario(100, 0.5, lap, lap)?) {
            RhoSquared::Infinite(_) => None,
            RhoSquared::Finite(v) => Some(format!("got finite {v}")),
        })
    }),
    ("sobolev norms", || {
        let lap = model(Family::Laplace { scale: 1.0 })?;
        let gau = model(Family::Gaussian { scale: 1.0 })?;
        let inf = sobolev_norm_sq(&lap, 2.0);
        Ok(close("laplace k=0", sobolev_norm_sq(&lap, 0.0), PI / 2.0, 1e-6)
            .or(close("gaussian k=0", sobolev_norm_sq(&gau, 0.0), PI.sqrt(), 1e-6))
            .or((!inf.is_infinite()).then(|| format!("laplace k=2: got {inf}"))))
    }),
    ("empirical cf", || {
        let v = ecf(&[0.0, 0.0, 0.0], 5.0)?;
        let one = ecf(&[0.7], 3.0)?;
        Ok(close("point mass", v.re, 1.0, 1e-15)
            .or(close("single sample", one.re, 2.1f64.cos(), 1e-14))
            .or(close("single sample imag", one.im, 2.1f64.sin(), 1e-14)))
    }),
    ("gaussian target density", || {
        let s = scenario(100, 0.5, Family::Laplace { scale: 1.0 }, Family::Gaussian { scale: 1.0 })?;
        let grid = GridSpec::default();
        let fw = true_fw(&s, &grid)?;
        let err = fw
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = grid.x(i);
                (v - (-x * x / 2.5).exp() / (2.5 * PI).sqrt()).abs()
            })
            .fold(0.0, f64::max);
        Ok(close("sup error", err, 0.0, 1e-6))
    }),
    ("gaussian L2 distance", || {
        let (step, m) = (0.01, 4001);
        let sq: Vec<f64> = (0..m)
            .map(|i| {
                let x = -20.0 + step * i as f64;
                let d = (-x * x / 2.0).exp() / (2.0 * PI).sqrt() - (-x * x / 8.0).exp() / (8.0 * PI).sqrt();
                d * d
            })
            .collect();
        Ok(close("ise", trapezoid(&sq, step), 0.06631, 1e-4))
    }),
    ("bias shape below sigma", || {
        let mut g = env(1.0, 1.0, 1.0)?;
        g.exp_scale = 0.0;
        let p = BoundParams::new(100.0, 0.5, 1.0, env(2.0, 0.0, 0.0)?, g)?;
        Ok(close("bias", bias_bound(&p, 0.25)?, 0.015625, 1e-15).or(close("h=0", bias_bound(&p, 0.0)?, 0.0, 0.0)))
    }),
    ("kappa", || Ok(close("kappa", kappa(1.0, 1.0, 1.0, 2.0), 0.5, 1e-15))),
    ("exponential root", || {
        Ok(close("z=0", solve_exp_eq(0.0, 100.0)?, 100f64.ln(), 1e-12)
            .or(close("z=1", solve_exp_eq(1.0, 2.0 * 2f64.exp())?, 2.0, 1e-10)))
    }),
    ("mu1", || {
        let m = mu1(1e6, 0.0, 1.0, 1.0, 1.0)?;
        let ln_n = 1e6f64.ln();
        // the printed 0.23355 carries rounded logarithms
        Ok(close("closed form", m, 2.0 / (ln_n - 2.0 * ln_n.ln()), 1e-12).or(close("printed", m, 0.23355, 1e-4)))
    }),
    ("case I oracle", || {
        let p = BoundParams::new(1e4, 0.5, 1.0, env(2.0, 0.0, 0.0)?, env(3.0, 0.0, 0.0)?)?;
        let above = optimal_bandwidth(&p)?.h_opt;
        let below = optimal_bandwidth(&p.with_sigma(0.1))?.h_opt;
        Ok(close("sigma 0.5", above, 0.0, 0.0).or(close("sigma 0.1", below, 0.26827, 1e-5)))
    }),
    ("identity blur returns latent draws", || {
        let s = scenario(500, 0.5, Family::Identity, Family::Gaussian { scale: 1.0 })?;
        Ok((sample_y(&s, 3, 1) != sample_x(&s, 3, 1)).then(|| "draws differ".to_string()))
    }),
    ("log-log fit", || {
        let pts: Vec<(f64, f64)> = [1e2f64, 1e3, 1e4, 1e5].iter().map(|n| (n.ln(), 1.5 - 0.5 * n.ln())).collect();
        let fit = fit_loglog(&pts)?;
        Ok(close("slope", fit.slope, -0.5, 1e-12).or(close("r^2", fit.r_squared, 1.0, 1e-12)))
    }),
];

pub fn run() -> std::result::Result<(), CliError> {
    let mut failed = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(None) => println!("ok   {name}"),
            Ok(Some(msg)) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
            Err(e) => {
                failed += 1;
                println!("FAIL {name}: {e}");
            }
        }
    }
    if failed > 0 {
        return Err(CliError::Check(format!("{failed} of {} self-checks failed", CHECKS.len())));
    }
    Ok(())
}
