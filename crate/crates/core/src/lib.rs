//! Density deconvolution with small Berkson errors.
//!
//! Observations `Y = X + ξ` with known blur density `f_ξ`; the target is the
//! density of `W = X + η` where `η` has density `σ⁻¹ g(x/σ)`.

pub mod bandwidth;
pub mod config;
pub mod error;
pub mod montecarlo;
pub mod quad;
pub mod risk;
pub mod estimator;
pub mod spectral;
pub mod suite;

pub use error::{DeconvError, Result};
