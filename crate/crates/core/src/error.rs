use thiserror::Error;

/// Errors raised by the deconvolution library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeconvError {
    /// A parameter is outside its domain.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// A scenario violates one of its structural conditions.
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// The request is well formed but not admissible for this scenario,
    /// e.g. the direct estimator when rho^2 is infinite.
    #[error("inadmissible request: {0}")]
    Inadmissible(String),

    /// The requested frequency band exceeds the configured truncation.
    #[error("frequency band 1/h = {band} exceeds the truncation limit {limit}")]
    Truncation { band: f64, limit: f64 },

    /// The sample size is too small for the asymptotic formulas.
    #[error("n = {n} is below the asymptotic regime (requires n >= {min_n:.6e})")]
    BelowAsymptoticRegime { n: f64, min_n: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Numerical procedure failed (non-convergence, loss of normalization, ...).
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl DeconvError {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        DeconvError::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, DeconvError>;
