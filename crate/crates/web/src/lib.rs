//! wasm-bindgen front end for the static demo page in `www/`.
//!
//! Every export takes a scenario config (the CLI's JSON format) and returns a
//! JSON string. The `*_json` functions hold the logic and are what the native
//! tests call.

use berkson_core::bandwidth::{log_grid, optimal_bandwidth};
use berkson_core::config::ScenarioConfig;
use berkson_core::estimator::{estimate, ise, true_fw};
use berkson_core::montecarlo::{exact_mise, sample_y, HRule};
use berkson_core::risk::{risk_bound, BoundParams};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn parse(config: &str) -> Result<ScenarioConfig, String> {
    ScenarioConfig::from_json(config).map_err(|e| e.to_string())
}

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Bias, variance and total bound over `points` log-spaced bandwidths.
pub fn risk_curve_json(config: &str, h_min: f64, h_max: f64, points: usize) -> Result<String, String> {
    if !(h_min > 0.0 && h_max > h_min && points >= 2) {
        return Err(format!("need 0 < h_min < h_max and points >= 2, got {h_min}, {h_max}, {points}"));
    }
    let s = parse(config)?.to_scenario().map_err(text)?;
    let p = BoundParams::from_scenario(&s);
    let hs = log_grid(h_min, h_max, points);
    let mut cols = (Vec::new(), Vec::new(), Vec::new());
    for &h in &hs {
        let r = risk_bound(&p, h).map_err(text)?;
        cols.0.push(r.delta1);
        cols.1.push(r.delta2 / p.n);
        cols.2.push(r.total);
    }
    Ok(json!({ "case": p.case(), "h": hs, "bias": cols.0, "variance": cols.1, "total": cols.2 }).to_string())
}

/// One simulated replication: estimate against the true `f_W`.
/// `h` is a number, `"oracle"` or `"zero"`.
pub fn simulate_json(config: &str, h: &str, seed: u64) -> Result<String, String> {
    let cfg = parse(config)?;
    let s = cfg.to_scenario().map_err(text)?;
    let grid = cfg.to_grid().map_err(text)?;
    let rule = match h {
        "oracle" => HRule::Oracle,
        "zero" => HRule::Zero,
        v => HRule::Fixed(v.parse().map_err(|_| format!("bad bandwidth {v:?}"))?),
    };
    let h = rule.resolve(&s).map_err(text)?;
    let est = estimate(&sample_y(&s, seed, 0), &s, h, &grid).map_err(text)?;
    let truth = true_fw(&s, &grid).map_err(text)?;
    let err = ise(&est, &truth).map_err(text)?;
    Ok(json!({ "h": h, "x": grid.xs(), "estimate": est.values, "truth": truth.values, "ise": err }).to_string())
}

/// Rate-table decision plus the exact MISE of the sinc estimator on a log grid.
pub fn decision_json(config: &str, points: usize) -> Result<String, String> {
    let s = parse(config)?.to_scenario().map_err(text)?;
    let d = optimal_bandwidth(&BoundParams::from_scenario(&s)).map_err(text)?;
    let hs = log_grid(0.02, 1.0, points.max(2));
    let mise = hs
        .iter()
        .map(|&h| exact_mise(&s, h).map(|m| m.total))
        .collect::<Result<Vec<_>, _>>()
        .map_err(text)?;
    let at_zero = exact_mise(&s, 0.0).ok().map(|m| m.total);
    Ok(json!({ "decision": d, "curve": { "h": hs, "mise": mise }, "mise_at_zero": at_zero }).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = riskCurve)]
pub fn risk_curve(config: &str, h_min: f64, h_max: f64, points: usize) -> Result<String, JsError> {
    js(risk_curve_json(config, h_min, h_max, points))
}

#[wasm_bindgen]
pub fn simulate(config: &str, h: &str, seed: u64) -> Result<String, JsError> {
    js(simulate_json(config, h, seed))
}

#[wasm_bindgen]
pub fn decision(config: &str, points: usize) -> Result<String, JsError> {
    js(decision_json(config, points))
}
