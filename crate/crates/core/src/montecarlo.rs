//! Seeded sampling from `Y = X + ξ`, replicated MISE estimation against the
//! true `f_W`, and log-log rate regression.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bandwidth::optimal_bandwidth;
use crate::error::{DeconvError, Result};
use crate::estimator::{estimate, ise, true_fw, DensityEstimate, GridSpec};
use crate::quad::{integrate, integrate_half_line};
use crate::risk::BoundParams;
use crate::spectral::{rho_squared, RhoSquared, Scenario};

/// One ChaCha stream per (replication, component): stream `2r` feeds `X`,
/// stream `2r + 1` feeds `ξ`, each consumed in draw order.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `n` observations `Y_i = X_i + ξ_i` for replication `rep_index`.
pub fn sample_y(scenario: &Scenario, seed: u64, rep_index: u64) -> Vec<f64> {
    let n = scenario.n() as usize;
    let mut x_rng = stream(seed, 2 * rep_index);
    let mut xi_rng = stream(seed, 2 * rep_index + 1);
    let (x, xi) = (scenario.x_model(), scenario.xi_model());
    (0..n).map(|_| x.sample(&mut x_rng) + xi.sample(&mut xi_rng)).collect()
}

/// Latent draws `X_i` of replication `rep_index` (the first summand of [`sample_y`]).
pub fn sample_x(scenario: &Scenario, seed: u64, rep_index: u64) -> Vec<f64> {
    let mut x_rng = stream(seed, 2 * rep_index);
    (0..scenario.n()).map(|_| scenario.x_model().sample(&mut x_rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiseEstimate {
    pub mean_ise: f64,
    pub std_error: f64,
    pub reps: usize,
    pub seed: u64,
    pub h: f64,
}

/// ISE of each listed replication, in list order.
pub fn replicate_ise(
    scenario: &Scenario,
    h: f64,
    grid: &GridSpec,
    target: &DensityEstimate,
    rep_indices: &[u64],
    seed: u64,
) -> Result<Vec<f64>> {
    let one = |&rep: &u64| -> Result<f64> {
        let ys = sample_y(scenario, seed, rep);
        let est = estimate(&ys, scenario, h, grid)?;
        ise(&est, target)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        rep_indices.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        rep_indices.iter().map(one).collect()
    }
}

/// Mean and standard error over the given replication indices.
pub fn mc_mise_reps(scenario: &Scenario, h: f64, grid: &GridSpec, rep_indices: &[u64], seed: u64) -> Result<MiseEstimate> {
    if rep_indices.len() < 2 {
        return Err(DeconvError::param("reps", "need at least 2 replications"));
    }
    let target = true_fw(scenario, grid)?;
    let values = replicate_ise(scenario, h, grid, &target, rep_indices, seed)?;
    let (mean, se) = mean_and_se(&values);
    Ok(MiseEstimate {
        mean_ise: mean,
        std_error: se,
        reps: values.len(),
        seed,
        h,
    })
}

/// MISE over replications `0..reps`.
pub fn mc_mise(scenario: &Scenario, h: f64, grid: &GridSpec, reps: usize, seed: u64) -> Result<MiseEstimate> {
    let idx: Vec<u64> = (0..reps as u64).collect();
    mc_mise_reps(scenario, h, grid, &idx, seed)
}

/// Index-ordered mean and `sd / sqrt(len)`.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Lag-1 sample autocorrelation.
pub fn lag1_autocorrelation(values: &[f64]) -> f64 {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let den: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let num: f64 = values.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Bandwidth used at each point of a rate study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "h")]
pub enum HRule {
    /// The rate-table oracle `h_opt(n, σ)`.
    Oracle,
    /// The direct estimator.
    Zero,
    Fixed(f64),
}

impl HRule {
    pub fn resolve(&self, scenario: &Scenario) -> Result<f64> {
        match *self {
            HRule::Oracle => Ok(optimal_bandwidth(&BoundParams::from_scenario(scenario))?.h_opt),
            HRule::Zero => Ok(0.0),
            HRule::Fixed(h) => Ok(h),
        }
    }
}

/// How σ follows n across a rate study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    /// The template's σ at every n.
    Fixed,
    /// `σ = c · n^{-1/(2k+2a+1)}`.
    Scaled { c: f64 },
}

impl SigmaRule {
    pub fn sigma(&self, template: &Scenario, n: u64) -> f64 {
        match *self {
            SigmaRule::Fixed => template.sigma(),
            SigmaRule::Scaled { c } => {
                let a = template.xi_model().envelope().poly_exp;
                let k = template.sobolev().k;
                c * (n as f64).powf(-1.0 / (2.0 * k + 2.0 * a + 1.0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ln x, ln y)` pairs the fit was computed from.
    pub points: Vec<(f64, f64)>,
}

/// Ordinary least squares of `y` on `x`.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(DeconvError::param("points", "a rate fit needs at least 3 points"));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(DeconvError::Numeric("non-finite point in rate fit".into()));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(DeconvError::param("points", "all abscissae coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: u64,
    pub sigma: f64,
    pub estimate: MiseEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub rows: Vec<RateRow>,
    pub fit: RateFit,
}

/// A failed rate study with the rows completed before the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct RateStudyError {
    pub partial: Vec<RateRow>,
    pub source: DeconvError,
}

impl std::fmt::Display for RateStudyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "rate study stopped after {} rows: {}", self.partial.len(), self.source)
    }
}

impl std::error::Error for RateStudyError {}

/// `mc_mise` at each n, then a least-squares fit of `ln MISE` on `ln n`.
#[allow(clippy::too_many_arguments)]
pub fn rate_study(
    template: &Scenario,
    sigma_rule: SigmaRule,
    n_list: &[u64],
    h_rule: HRule,
    grid: &GridSpec,
    reps: usize,
    seed: u64,
) -> std::result::Result<RateStudy, RateStudyError> {
    let mut rows = Vec::with_capacity(n_list.len());
    let fail = |rows: &Vec<RateRow>, source| RateStudyError {
        partial: rows.clone(),
        source,
    };
    if n_list.len() < 3 {
        return Err(fail(&rows, DeconvError::param("n_list", "need at least 3 sample sizes")));
    }
    for &n in n_list {
        let step = || -> Result<RateRow> {
            let sigma = sigma_rule.sigma(template, n);
            let scenario = template.with_n(n)?.with_sigma(sigma)?;
            let h = h_rule.resolve(&scenario)?;
            let estimate = mc_mise(&scenario, h, grid, reps, seed)?;
            Ok(RateRow { n, sigma, estimate })
        };
        match step() {
            Ok(row) => rows.push(row),
            Err(e) => return Err(fail(&rows, e)),
        }
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.n as f64).ln(), r.estimate.mean_ise.ln()))
        .collect();
    match fit_loglog(&points) {
        Ok(fit) => Ok(RateStudy { rows, fit }),
        Err(e) => Err(fail(&rows, e)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactMise {
    /// `(2π)⁻¹ ∫_{|s|>1/h} |f_W*|²`.
    pub bias_sq: f64,
    /// `(2πn)⁻¹ ∫_{|s|≤1/h} |g*(σs)/f_ξ*(s)|² (1 - |f_Y*(s)|²)`.
    pub variance: f64,
    pub total: f64,
}

/// Exact MISE of the sinc-kernel (or direct) estimator by Plancherel.
pub fn exact_mise(scenario: &Scenario, h: f64) -> Result<ExactMise> {
    if !(h.is_finite() && h >= 0.0) {
        return Err(DeconvError::param("h", "must be finite and nonnegative"));
    }
    let n = scenario.n() as f64;
    let sigma = scenario.sigma();
    let (x, xi, g) = (scenario.x_model(), scenario.xi_model(), scenario.g_model());
    // ln of r²(1 - |f_Y*|²)
    let ln_var = |s: f64| {
        let ln_r2 = 2.0 * (g.ln_abs_cf(sigma * s) - xi.ln_abs_cf(s));
        let ln_fy2 = 2.0 * (x.ln_abs_cf(s) + xi.ln_abs_cf(s));
        ln_r2 + (-ln_fy2.exp_m1()).ln()
    };
    let variance_integral = if h == 0.0 {
        if let RhoSquared::Infinite(reason) = rho_squared(scenario) {
            return Err(DeconvError::Inadmissible(format!("h = 0 with infinite rho^2: {reason}")));
        }
        integrate_half_line(ln_var, 1e-14)?.value()
    } else {
        let band = 1.0 / h;
        let peak = (0..=400)
            .map(|i| ln_var(band * i as f64 / 400.0))
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let r = integrate(|s| (ln_var(s) - peak).exp(), 0.0, band, 0.0, 1e-11, 4000);
        peak.exp() * r.value
    };
    let bias_sq = if h == 0.0 {
        0.0
    } else {
        let b = 1.0 / h;
        let ln_w2 = |t: f64| 2.0 * (x.ln_abs_cf(b + t) + g.ln_abs_cf(sigma * (b + t)));
        if ln_w2(0.0) < -700.0 {
            0.0
        } else {
            integrate_half_line(ln_w2, 1e-14)?.value() / PI
        }
    };
    let variance = variance_integral / (PI * n);
    Ok(ExactMise {
        bias_sq,
        variance,
        total: bias_sq + variance,
    })
}
