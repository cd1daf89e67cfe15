use berkson_web::{decision_json, risk_curve_json, simulate_json};
use serde_json::Value;

const CONFIG: &str = r#"{
  "n": 2000, "sigma": 0.3,
  "x_model": {"family": "gaussian", "params": {"scale": 1.0}},
  "xi_model": {"family": "laplace", "params": {"scale": 1.0}},
  "g_model": {"family": "gaussian", "params": {"scale": 1.0}},
  "sobolev": {"k": 1.0, "B": 2.0},
  "grid": {"x_min": -8.0, "x_max": 8.0, "x_points": 128, "s_points": 256}
}"#;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn risk_curve_columns() {
    let v = parse(&risk_curve_json(CONFIG, 1e-3, 1.0, 30).unwrap());
    assert_eq!(v["case"], "IV");
    for key in ["h", "bias", "variance", "total"] {
        assert_eq!(v[key].as_array().unwrap().len(), 30, "{key}");
    }
    assert!(risk_curve_json(CONFIG, 1.0, 0.5, 30).is_err());
}

#[test]
fn simulate_returns_estimate_and_truth() {
    let v = parse(&simulate_json(CONFIG, "oracle", 3).unwrap());
    let x = v["x"].as_array().unwrap();
    assert_eq!(x.len(), 128);
    assert_eq!(v["estimate"].as_array().unwrap().len(), 128);
    assert!(v["ise"].as_f64().unwrap() < 0.05);
    assert_eq!(simulate_json(CONFIG, "0.4", 3).unwrap(), simulate_json(CONFIG, "0.4", 3).unwrap());
    assert!(simulate_json(CONFIG, "wide", 3).is_err());
}

#[test]
fn decision_with_curve() {
    let v = parse(&decision_json(CONFIG, 12).unwrap());
    assert_eq!(v["decision"]["case"], "IV");
    assert_eq!(v["curve"]["mise"].as_array().unwrap().len(), 12);
    assert!(v["mise_at_zero"].as_f64().unwrap() > 0.0);
}

#[test]
fn bad_config_is_an_error() {
    let err = risk_curve_json("{\"n\": 1}", 0.01, 1.0, 5).unwrap_err();
    assert!(err.contains("missing field"));
}
