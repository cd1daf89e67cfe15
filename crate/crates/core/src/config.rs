//! JSON scenario configuration: one document describes one scenario, with
//! optional extensions for rate studies.

use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};
use crate::estimator::GridSpec;
use crate::montecarlo::SigmaRule;
use crate::spectral::{Family, Scenario, SobolevSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    pub s_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            x_min: g.x_min,
            x_max: g.x_max,
            x_points: g.x_points,
            s_points: g.s_points,
            s_max: None,
        }
    }
}

impl GridConfig {
    pub fn to_grid(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.x_min,
            self.x_max,
            self.x_points,
            self.s_max.unwrap_or(GridSpec::default().s_max),
            self.s_points,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaScaling {
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n: u64,
    pub sigma: f64,
    pub x_model: Family,
    pub xi_model: Family,
    pub g_model: Family,
    pub sobolev: SobolevConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reps: Option<usize>,
    /// Sample sizes of a rate study.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<u64>>,
    /// Co-vary σ with n as `c · n^{-1/(2k+2a+1)}` in rate studies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_scaling: Option<SigmaScaling>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevConfig {
    pub k: f64,
    #[serde(rename = "B")]
    pub radius: f64,
}

/// Why a configuration document was rejected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] DeconvError),
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.to_scenario()?;
        cfg.to_grid()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let sobolev = SobolevSpec::new(self.sobolev.k, self.sobolev.radius)?;
        Scenario::from_families(self.n, self.sigma, self.x_model, self.xi_model, self.g_model, sobolev)
    }

    pub fn to_grid(&self) -> Result<GridSpec> {
        self.grid.to_grid()
    }

    pub fn sigma_rule(&self) -> Result<SigmaRule> {
        match self.sigma_scaling {
            None => Ok(SigmaRule::Fixed),
            Some(SigmaScaling { c }) if c.is_finite() && c > 0.0 => Ok(SigmaRule::Scaled { c }),
            Some(SigmaScaling { c }) => Err(DeconvError::param("sigma_scaling.c", format!("must be positive, got {c}"))),
        }
    }

    /// Config for an existing scenario (used by the canned suite).
    pub fn from_scenario(s: &Scenario, grid: &GridSpec) -> Self {
        Self {
            n: s.n(),
            sigma: s.sigma(),
            x_model: s.x_model().family(),
            xi_model: s.xi_model().family(),
            g_model: s.g_model().family(),
            sobolev: SobolevConfig {
                k: s.sobolev().k,
                radius: s.sobolev().radius,
            },
            grid: GridConfig {
                x_min: grid.x_min,
                x_max: grid.x_max,
                x_points: grid.x_points,
                s_points: grid.s_points,
                s_max: Some(grid.s_max),
            },
            seed: None,
            reps: None,
            n_list: None,
            sigma_scaling: None,
        }
    }
}
