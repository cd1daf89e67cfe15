use berkson_core::config::ConfigError;
use berkson_core::DeconvError;
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    ReadConfig { path: String, source: std::io::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] DeconvError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{0}")]
    Check(String),
}

impl From<berkson_core::montecarlo::RateStudyError> for CliError {
    fn from(e: berkson_core::montecarlo::RateStudyError) -> Self {
        CliError::Core(e.source)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ReadConfig { .. } | CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Core(e) => core_exit(e),
            CliError::Write { .. } | CliError::Check(_) => 1,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            CliError::ReadConfig { .. } => "config_unreadable",
            CliError::Config(ConfigError::Parse { .. }) => "config_parse",
            CliError::Config(ConfigError::Invalid(e)) | CliError::Core(e) => core_code(e),
            CliError::Usage(_) => "usage",
            CliError::Write { .. } => "io",
            CliError::Check(_) => "check_failed",
        }
    }

    fn context(&self) -> Value {
        match self {
            CliError::ReadConfig { path, .. } | CliError::Write { path, .. } => json!({ "path": path }),
            CliError::Config(ConfigError::Parse { line, column, message }) => {
                let mut ctx = json!({ "line": line, "column": column });
                if let Some(field) = backticked(message) {
                    ctx["field"] = json!(field);
                }
                ctx
            }
            CliError::Config(ConfigError::Invalid(e)) | CliError::Core(e) => core_context(e),
            CliError::Usage(_) | CliError::Check(_) => json!({}),
        }
    }

    /// Single-line JSON diagnostic for stderr.
    pub fn to_json_line(&self) -> String {
        json!({ "code": self.code(), "message": self.to_string(), "context": self.context() }).to_string()
    }
}

fn core_exit(e: &DeconvError) -> i32 {
    match e {
        DeconvError::InvalidParameter { .. } | DeconvError::InvalidScenario(_) | DeconvError::GridMismatch(_) => 2,
        DeconvError::Inadmissible(_) | DeconvError::Truncation { .. } | DeconvError::BelowAsymptoticRegime { .. } => 3,
        DeconvError::Numeric(_) => 1,
    }
}

fn core_code(e: &DeconvError) -> &'static str {
    match e {
        DeconvError::InvalidParameter { .. } => "invalid_parameter",
        DeconvError::InvalidScenario(_) => "invalid_scenario",
        DeconvError::GridMismatch(_) => "grid_mismatch",
        DeconvError::Inadmissible(_) => "inadmissible",
        DeconvError::Truncation { .. } => "truncation",
        DeconvError::BelowAsymptoticRegime { .. } => "below_asymptotic_regime",
        DeconvError::Numeric(_) => "numeric",
    }
}

fn core_context(e: &DeconvError) -> Value {
    match e {
        DeconvError::InvalidParameter { field, .. } => json!({ "field": field }),
        DeconvError::Truncation { band, limit } => json!({ "band": band, "limit": limit }),
        DeconvError::BelowAsymptoticRegime { n, min_n } => json!({ "n": n, "min_n": min_n }),
        _ => json!({}),
    }
}

// serde names fields as `name` in its messages
fn backticked(msg: &str) -> Option<&str> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(&msg[start..start + len])
}
