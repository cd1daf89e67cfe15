use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use berkson_core::bandwidth::{log_grid, optimal_bandwidth};
use berkson_core::config::ScenarioConfig;
use berkson_core::estimator::{self, GridSpec};
use berkson_core::montecarlo::{mc_mise, rate_study, sample_y, HRule, RateRow};
use berkson_core::risk::{self, classify_case, BoundParams, CaseId};
use berkson_core::spectral::{rho_squared, sigma_upper_limit, RhoSquared, Scenario};
use berkson_core::suite::saddle_sweep;
use serde_json::json;

use crate::error::CliError;
use crate::{Common, Format};

pub const SEED_ENV: &str = "DECONV_SEED";
const DEFAULT_REPS: usize = 100;

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

struct Loaded {
    cfg: ScenarioConfig,
    scenario: Scenario,
    grid: GridSpec,
}

fn load(common: &Common) -> Result<Loaded, CliError> {
    let path = common.config.display().to_string();
    let text = fs::read_to_string(&common.config).map_err(|source| CliError::ReadConfig { path, source })?;
    let cfg = ScenarioConfig::from_json(&text)?;
    let scenario = cfg.to_scenario()?;
    let grid = cfg.to_grid()?;
    Ok(Loaded { cfg, scenario, grid })
}

/// `--seed`, then the config, then the environment, then 0.
fn resolve_seed(flag: Option<u64>, cfg: &ScenarioConfig) -> Result<u64, CliError> {
    if let Some(s) = flag.or(cfg.seed) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

fn parse_h(text: &str) -> Result<HRule, CliError> {
    match text {
        "oracle" => Ok(HRule::Oracle),
        "zero" => Ok(HRule::Zero),
        other => match other.parse::<f64>() {
            Ok(h) if h.is_finite() && h >= 0.0 => Ok(HRule::Fixed(h)),
            _ => Err(CliError::Usage(format!("--h must be a nonnegative number, `oracle` or `zero`, got {other:?}"))),
        },
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, content).map_err(|source| CliError::Write {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write { path: "<stdout>".into(), source })
        }
    }
}

fn json_line(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string(v).expect("json value serializes");
    s.push('\n');
    s
}

pub fn classify(common: &Common) -> Result<(), CliError> {
    let l = load(common)?;
    let (xi, g) = (l.scenario.xi_model().envelope(), l.scenario.g_model().envelope());
    let rho = match rho_squared(&l.scenario) {
        RhoSquared::Finite(v) => json!({ "finite": true, "value": v }),
        RhoSquared::Infinite(reason) => json!({ "finite": false, "reason": reason }),
    };
    let out = json!({
        "case": classify_case(xi, g),
        "envelopes": { "xi": xi, "g": g },
        "rho_squared": rho,
        "sigma_upper_limit": sigma_upper_limit(xi, g),
    });
    emit(common.out.as_deref(), &json_line(&out))
}

pub fn bandwidth(common: &Common) -> Result<(), CliError> {
    let l = load(common)?;
    let decision = optimal_bandwidth(&BoundParams::from_scenario(&l.scenario))?;
    let value = serde_json::to_value(&decision).expect("decision serializes");
    emit(common.out.as_deref(), &json_line(&value))
}

pub fn risk_bound_csv(p: &BoundParams, hs: &[f64]) -> Result<String, CliError> {
    let mut csv = String::from("h,delta1,delta2,total,case,branch\n");
    for &h in hs {
        let r = risk::risk_bound(p, h)?;
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(h),
            num(r.delta1),
            num(r.delta2),
            num(r.total),
            r.case,
            r.branch
        )
        .expect("string write");
    }
    Ok(csv)
}

pub fn risk_bound(common: &Common, h_min: f64, h_max: f64, points: usize) -> Result<(), CliError> {
    if !(h_min > 0.0 && h_max >= h_min && h_max.is_finite() && points >= 1) {
        return Err(CliError::Usage(format!(
            "need 0 < --h-min <= --h-max and --h-points >= 1, got {h_min}, {h_max}, {points}"
        )));
    }
    let l = load(common)?;
    let hs = if points == 1 { vec![h_min] } else { log_grid(h_min, h_max, points) };
    let csv = risk_bound_csv(&BoundParams::from_scenario(&l.scenario), &hs)?;
    emit(common.out.as_deref(), &csv)
}

pub fn estimate(common: &Common, seed: Option<u64>, h: &str, rep: u64, clip: bool) -> Result<(), CliError> {
    let l = load(common)?;
    let seed = resolve_seed(seed, &l.cfg)?;
    let h = parse_h(h)?.resolve(&l.scenario)?;
    let ys = sample_y(&l.scenario, seed, rep);
    let mut est = estimator::estimate(&ys, &l.scenario, h, &l.grid)?;
    if clip {
        est = est.clipped();
    }
    emit(common.out.as_deref(), &est.to_csv())
}

const MISE_HEADER: &str = "n,h,mean_ise,std_error,reps,seed\n";

fn mise_row(csv: &mut String, n: u64, e: &berkson_core::montecarlo::MiseEstimate) {
    writeln!(csv, "{},{},{},{},{},{}", n, num(e.h), num(e.mean_ise), num(e.std_error), e.reps, e.seed)
        .expect("string write");
}

pub fn mise(common: &Common, seed: Option<u64>, h: &str, reps: Option<usize>) -> Result<(), CliError> {
    let l = load(common)?;
    let seed = resolve_seed(seed, &l.cfg)?;
    let reps = reps.or(l.cfg.reps).unwrap_or(DEFAULT_REPS);
    let h = parse_h(h)?.resolve(&l.scenario)?;
    let e = mc_mise(&l.scenario, h, &l.grid, reps, seed)?;
    let mut csv = String::from(MISE_HEADER);
    mise_row(&mut csv, l.scenario.n(), &e);
    emit(common.out.as_deref(), &csv)
}

fn rows_csv(rows: &[RateRow]) -> String {
    let mut csv = String::from(MISE_HEADER);
    for r in rows {
        mise_row(&mut csv, r.n, &r.estimate);
    }
    csv
}

pub fn rates(
    common: &Common,
    seed: Option<u64>,
    h: &str,
    reps: Option<usize>,
    format: Format,
    fit_out: Option<&Path>,
) -> Result<(), CliError> {
    let l = load(common)?;
    let seed = resolve_seed(seed, &l.cfg)?;
    let reps = reps.or(l.cfg.reps).unwrap_or(DEFAULT_REPS);
    let h_rule = parse_h(h)?;
    let n_list = l
        .cfg
        .n_list
        .clone()
        .ok_or_else(|| CliError::Usage("rates needs an `n_list` array in the config".into()))?;
    let sigma_rule = l.cfg.sigma_rule()?;
    let study = match rate_study(&l.scenario, sigma_rule, &n_list, h_rule, &l.grid, reps, seed) {
        Ok(s) => s,
        Err(e) => {
            // keep whatever finished
            if !e.partial.is_empty() && format == Format::Csv {
                emit(common.out.as_deref(), &rows_csv(&e.partial))?;
            }
            return Err(e.into());
        }
    };
    let fit = serde_json::to_value(&study.fit).expect("fit serializes");
    match format {
        Format::Json => {
            let rows: Vec<_> = study
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "n": r.n,
                        "sigma": r.sigma,
                        "h": r.estimate.h,
                        "mean_ise": r.estimate.mean_ise,
                        "std_error": r.estimate.std_error,
                        "reps": r.estimate.reps,
                        "seed": r.estimate.seed,
                    })
                })
                .collect();
            emit(common.out.as_deref(), &json_line(&json!({ "fit": fit, "rows": rows })))
        }
        Format::Csv => {
            emit(common.out.as_deref(), &rows_csv(&study.rows))?;
            match (fit_out, &common.out) {
                (Some(p), _) => emit(Some(p), &json_line(&fit)),
                (None, Some(_)) => emit(None, &json_line(&fit)),
                (None, None) => Ok(()),
            }
        }
    }
}

pub const SADDLE_RANGE: (f64, f64) = (0.1, 10.0);

pub fn laplace_check(out: Option<&Path>) -> Result<(), CliError> {
    let mut csv = String::from("case,sigma,h,ratio\n");
    let mut bad = 0usize;
    let mut total = 0usize;
    for case in [CaseId::V, CaseId::VI, CaseId::VII, CaseId::VIII] {
        for pt in saddle_sweep(case)? {
            let r = pt.ratio()?;
            total += 1;
            if !(SADDLE_RANGE.0..=SADDLE_RANGE.1).contains(&r) {
                bad += 1;
            }
            writeln!(csv, "{},{},{},{}", case, num(pt.params.sigma), num(pt.h), num(r)).expect("string write");
        }
    }
    emit(out, &csv)?;
    if bad > 0 {
        return Err(CliError::Check(format!(
            "{bad} of {total} ratios outside [{}, {}]",
            SADDLE_RANGE.0, SADDLE_RANGE.1
        )));
    }
    Ok(())
}
