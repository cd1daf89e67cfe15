//! Characteristic-function models, their decay envelopes, Sobolev-ball
//! membership and the square-integrability integral `rho^2(sigma)` of the
//! blur ratio `g*(sigma w) / f_xi*(w)`.
//!
//! Fourier convention: `f*(w) = ∫ e^{iwx} f(x) dx`, inverse with `1/(2π)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};
use crate::quad::{integrate, integrate_half_line};

/// Upper end of the audit grid on which envelope constants are fitted and checked.
pub const AUDIT_MAX: f64 = 100.0;
/// Number of points on the audit grid `[0, AUDIT_MAX]`.
pub const AUDIT_POINTS: usize = 2001;

/// Relative level at which `rho^2` quadrature is truncated.
const RHO_CUTOFF: f64 = 1e-12;

/// Tolerance used when comparing smoothness exponents (e.g. `alpha = a + 1/2`).
pub const EXPONENT_TOL: f64 = 1e-12;

/// Audit grid of frequencies, uniform on `[0, AUDIT_MAX]`.
pub fn audit_grid() -> impl Iterator<Item = f64> {
    (0..AUDIT_POINTS).map(|i| AUDIT_MAX * i as f64 / (AUDIT_POINTS - 1) as f64)
}

/// Decay envelope of a characteristic function:
/// `c_lower · S(s) ≤ |f*(s)| ≤ c_upper · S(s)` with
/// `S(s) = (s² + 1)^{-poly_exp/2} · exp(-exp_scale · |s|^exp_exp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessEnvelope {
    pub c_lower: f64,
    pub c_upper: f64,
    pub poly_exp: f64,
    pub exp_exp: f64,
    pub exp_scale: f64,
}

impl SmoothnessEnvelope {
    pub fn new(c_lower: f64, c_upper: f64, poly_exp: f64, exp_exp: f64, exp_scale: f64) -> Result<Self> {
        let env = Self {
            c_lower,
            c_upper,
            poly_exp,
            exp_exp,
            exp_scale,
        };
        env.validate()?;
        Ok(env)
    }

    /// Envelope with unit constants; convenient for bound evaluation where
    /// only the exponents matter.
    pub fn shape(poly_exp: f64, exp_exp: f64, exp_scale: f64) -> Result<Self> {
        Self::new(1.0, 1.0, poly_exp, exp_exp, exp_scale)
    }

    fn validate(&self) -> Result<()> {
        let all = [self.c_lower, self.c_upper, self.poly_exp, self.exp_exp, self.exp_scale];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(DeconvError::param("envelope", "all envelope fields must be finite"));
        }
        if !(self.c_lower > 0.0 && self.c_upper > 0.0) {
            return Err(DeconvError::param("envelope", "constants must be positive"));
        }
        if self.c_lower > self.c_upper {
            return Err(DeconvError::param("envelope", "c_lower exceeds c_upper"));
        }
        if self.poly_exp < 0.0 || self.exp_exp < 0.0 || self.exp_scale < 0.0 {
            return Err(DeconvError::param("envelope", "exponents must be nonnegative"));
        }
        if (self.exp_exp == 0.0) != (self.exp_scale == 0.0) {
            return Err(DeconvError::param(
                "envelope",
                "exponential exponent is zero iff its scale is zero",
            ));
        }
        if self.exp_scale == 0.0 && self.poly_exp <= 0.0 {
            return Err(DeconvError::param(
                "envelope",
                "polynomial exponent must be positive when there is no exponential decay",
            ));
        }
        Ok(())
    }

    /// `ln S(s)`, the log of the envelope shape without constants.
    pub fn ln_shape(&self, s: f64) -> f64 {
        -0.5 * self.poly_exp * (s * s).ln_1p() - self.exp_scale * s.abs().powf(self.exp_exp)
    }

    /// True when the envelope decays exponentially (supersmooth).
    pub fn is_supersmooth(&self) -> bool {
        self.exp_exp > 0.0
    }
}

/// Closed-form density families used for `f_X`, `f_xi` and `g`.
///
/// Every family is symmetric, so its characteristic function is real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// Normal with standard deviation `scale`: `exp(-scale² s² / 2)`.
    Gaussian { scale: f64 },
    /// Laplace with scale `scale`: `1 / (1 + scale² s²)`.
    Laplace { scale: f64 },
    /// Difference of two independent Gamma(order, scale) variables:
    /// `(1 + scale² s²)^{-order}`.
    SymmetricGamma { scale: f64, order: f64 },
    /// Symmetric stable law: `exp(-scale |s|^exponent)`, exponent in (0, 2].
    ExpPower { scale: f64, exponent: f64 },
    /// Point mass at zero, `cf ≡ 1`.
    Identity,
}

impl Family {
    fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(DeconvError::param(field, format!("must be positive and finite, got {v}")))
            }
        };
        match *self {
            Family::Gaussian { scale } | Family::Laplace { scale } => positive("scale", scale),
            Family::SymmetricGamma { scale, order } => {
                positive("scale", scale)?;
                positive("order", order)
            }
            Family::ExpPower { scale, exponent } => {
                positive("scale", scale)?;
                positive("exponent", exponent)?;
                if exponent > 2.0 {
                    return Err(DeconvError::param(
                        "exponent",
                        format!("stable exponent must lie in (0, 2], got {exponent}"),
                    ));
                }
                Ok(())
            }
            Family::Identity => Ok(()),
        }
    }

    /// `ln |f*(s)|`, evaluated without forming `f*(s)` so it never underflows.
    pub fn ln_abs_cf(&self, s: f64) -> f64 {
        match *self {
            Family::Gaussian { scale } => -0.5 * scale * scale * s * s,
            Family::Laplace { scale } => -(scale * scale * s * s).ln_1p(),
            Family::SymmetricGamma { scale, order } => -order * (scale * scale * s * s).ln_1p(),
            Family::ExpPower { scale, exponent } => -scale * s.abs().powf(exponent),
            Family::Identity => 0.0,
        }
    }

    pub fn cf(&self, s: f64) -> Complex64 {
        Complex64::new(self.ln_abs_cf(s).exp(), 0.0)
    }

    /// Exponents `(poly, exp_exp, exp_scale)` of the natural envelope.
    fn envelope_exponents(&self) -> (f64, f64, f64) {
        match *self {
            Family::Gaussian { scale } => (0.0, 2.0, 0.5 * scale * scale),
            Family::Laplace { .. } => (2.0, 0.0, 0.0),
            Family::SymmetricGamma { order, .. } => (2.0 * order, 0.0, 0.0),
            Family::ExpPower { scale, exponent } => (0.0, exponent, scale),
            Family::Identity => (0.0, 0.0, 0.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Family::Gaussian { scale } => {
                let z: f64 = StandardNormal.sample(rng);
                scale * z
            }
            Family::Laplace { scale } => {
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                scale * (e1 - e2)
            }
            Family::SymmetricGamma { scale, order } => {
                let gamma = Gamma::new(order, scale).expect("validated gamma parameters");
                gamma.sample(rng) - gamma.sample(rng)
            }
            Family::ExpPower { scale, exponent } => {
                scale.powf(1.0 / exponent) * sample_symmetric_stable(exponent, rng)
            }
            Family::Identity => 0.0,
        }
    }

    /// Pointwise density; `None` for the point mass.
    pub fn density(&self, x: f64) -> Option<f64> {
        match *self {
            Family::Gaussian { scale } => {
                let z = x / scale;
                Some((-0.5 * z * z).exp() / (scale * (2.0 * PI).sqrt()))
            }
            Family::Laplace { scale } => Some((-x.abs() / scale).exp() / (2.0 * scale)),
            Family::SymmetricGamma { scale, order } => {
                Some(symmetric_gamma_density(x / scale, order) / scale)
            }
            Family::ExpPower { scale, exponent } => Some(stable_density(x, scale, exponent)),
            Family::Identity => None,
        }
    }
}

/// Chambers–Mallows–Stuck draw with characteristic function `exp(-|s|^alpha)`.
fn sample_symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u = PI * (rng.random::<f64>() - 0.5);
    let w: f64 = Exp1.sample(rng);
    if (alpha - 1.0).abs() < 1e-12 {
        return u.tan();
    }
    let head = (alpha * u).sin() / u.cos().powf(1.0 / alpha);
    let tail = (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha);
    head * tail
}

/// `K_nu(z)` from `∫_0^∞ exp(-z cosh t) cosh(nu t) dt` (trapezoid, which
/// converges geometrically for this analytic, doubly decaying integrand).
fn bessel_k(nu: f64, z: f64) -> f64 {
    let step: f64 = 0.01;
    let mut sum = 0.5 * (-z).exp();
    let mut t = step;
    loop {
        let term = (-z * t.cosh() + nu.abs() * t).exp() * 0.5 * (1.0 + (-2.0 * nu.abs() * t).exp());
        sum += term;
        if z * t.cosh() - nu.abs() * t > 46.0 && t > 1.0 {
            break;
        }
        t += step;
    }
    sum * step
}

/// Density of `G1 - G2` with `G_i ~ Gamma(p, 1)`:
/// `|x|^{p-1/2} K_{p-1/2}(|x|) / (sqrt(pi) Gamma(p) 2^{p-1/2})`.
fn symmetric_gamma_density(x: f64, order: f64) -> f64 {
    use libm::tgamma as gamma;
    let nu = order - 0.5;
    let ax = x.abs();
    if ax == 0.0 {
        return if order > 0.5 {
            gamma(nu) / (2.0 * PI.sqrt() * gamma(order))
        } else {
            f64::INFINITY
        };
    }
    ax.powf(nu) * bessel_k(nu, ax) / (PI.sqrt() * gamma(order) * 2f64.powf(nu))
}

fn stable_density(x: f64, scale: f64, exponent: f64) -> f64 {
    if (exponent - 2.0).abs() < 1e-12 {
        let var = 2.0 * scale;
        return (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
    }
    if (exponent - 1.0).abs() < 1e-12 {
        return scale / (PI * (scale * scale + x * x));
    }
    let upper = (40.0 / scale).powf(1.0 / exponent);
    let r = integrate(
        |s| (s * x).cos() * (-scale * s.powf(exponent)).exp(),
        0.0,
        upper,
        1e-14,
        1e-11,
        4000,
    );
    r.value / PI
}

/// A density family together with its fitted decay envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicModel {
    family: Family,
    envelope: SmoothnessEnvelope,
    envelope_exempt: bool,
}

impl CharacteristicModel {
    /// Builds the model and fits the envelope constants on the audit grid.
    pub fn new(family: Family) -> Result<Self> {
        family.validate()?;
        let (poly, exp_exp, exp_scale) = family.envelope_exponents();
        if family == Family::Identity {
            return Ok(Self {
                family,
                envelope: SmoothnessEnvelope {
                    c_lower: 1.0,
                    c_upper: 1.0,
                    poly_exp: 0.0,
                    exp_exp: 0.0,
                    exp_scale: 0.0,
                },
                envelope_exempt: true,
            });
        }
        let shape = SmoothnessEnvelope {
            c_lower: 1.0,
            c_upper: 1.0,
            poly_exp: poly,
            exp_exp,
            exp_scale,
        };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in audit_grid() {
            let ln_ratio = family.ln_abs_cf(s) - shape.ln_shape(s);
            lo = lo.min(ln_ratio);
            hi = hi.max(ln_ratio);
        }
        let envelope = SmoothnessEnvelope::new(lo.exp(), hi.exp(), poly, exp_exp, exp_scale)?;
        Ok(Self {
            family,
            envelope,
            envelope_exempt: false,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn envelope(&self) -> &SmoothnessEnvelope {
        &self.envelope
    }

    /// The point-mass model is admitted without satisfying the envelope rules.
    pub fn envelope_exempt(&self) -> bool {
        self.envelope_exempt
    }

    pub fn cf(&self, s: f64) -> Complex64 {
        self.family.cf(s)
    }

    pub fn ln_abs_cf(&self, s: f64) -> f64 {
        self.family.ln_abs_cf(s)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.family.sample(rng)
    }

    pub fn density(&self, x: f64) -> Option<f64> {
        self.family.density(x)
    }

    /// Checks `c_lower S(s) ≤ |cf(s)| ≤ c_upper S(s)` at each frequency,
    /// with a relative slack for rounding.
    pub fn envelope_brackets(&self, freqs: impl IntoIterator<Item = f64>, rel_slack: f64) -> bool {
        let env = &self.envelope;
        freqs.into_iter().all(|s| {
            let ln_ratio = self.ln_abs_cf(s) - env.ln_shape(s);
            ln_ratio >= env.c_lower.ln() - rel_slack && ln_ratio <= env.c_upper.ln() + rel_slack
        })
    }
}

/// Exact characteristic function of the model at `s`.
pub fn cf_eval(model: &CharacteristicModel, s: f64) -> Complex64 {
    model.cf(s)
}

/// Sobolev ball `S(k, B)`: `∫ |f*(s)|² (s² + 1)^k ds ≤ B²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevSpec {
    pub k: f64,
    #[serde(rename = "B")]
    pub radius: f64,
}

impl SobolevSpec {
    pub fn new(k: f64, radius: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(DeconvError::param("sobolev.k", format!("must be positive, got {k}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(DeconvError::param("sobolev.B", format!("must be positive, got {radius}")));
        }
        Ok(Self { k, radius })
    }
}

/// `∫ |f*(s)|² (s² + 1)^k ds` over the real line, or `+inf` when the
/// algebraic tail makes it divergent (decided from exponents, not quadrature).
pub fn sobolev_norm_sq(model: &CharacteristicModel, k: f64) -> f64 {
    let env = model.envelope();
    if model.envelope_exempt() {
        return f64::INFINITY;
    }
    if !env.is_supersmooth() && 2.0 * env.poly_exp - 2.0 * k <= 1.0 {
        return f64::INFINITY;
    }
    let ln_f = |s: f64| 2.0 * model.ln_abs_cf(s) + k * (s * s).ln_1p();
    match integrate_half_line(ln_f, 1e-15) {
        Ok(r) => 2.0 * r.value(),
        Err(_) => f64::INFINITY,
    }
}

/// Outcome of the `rho^2(sigma)` integrability check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RhoSquared {
    Finite(f64),
    Infinite(String),
}

impl RhoSquared {
    pub fn is_finite(&self) -> bool {
        matches!(self, RhoSquared::Finite(_))
    }
}

/// Decides from the envelopes whether `∫ |g*(σw)/f_ξ*(w)|² dw` converges.
///
/// Returns `Ok(())` when finite, otherwise the reason it diverges.
pub fn rho_squared_finite(
    xi: &SmoothnessEnvelope,
    g: &SmoothnessEnvelope,
    sigma: f64,
) -> std::result::Result<(), String> {
    let (a, b, d) = (xi.poly_exp, xi.exp_exp, xi.exp_scale);
    let (alpha, beta, gamma) = (g.poly_exp, g.exp_exp, g.exp_scale);
    if beta > b + EXPONENT_TOL {
        return Ok(());
    }
    if b > beta + EXPONENT_TOL {
        return Err(format!(
            "f_xi decays like exp(-{d}|s|^{b}) faster than g (beta = {beta}); the ratio grows exponentially"
        ));
    }
    // equal exponential exponents
    let poly_ok = 2.0 * (alpha - a) > 1.0 + EXPONENT_TOL;
    if b == 0.0 {
        return if poly_ok {
            Ok(())
        } else {
            Err(format!(
                "b = beta = 0 and 2(alpha - a) = {} <= 1; the ratio is not square integrable",
                2.0 * (alpha - a)
            ))
        };
    }
    let net = gamma * sigma.powf(beta) - d;
    if net > EXPONENT_TOL || (net.abs() <= EXPONENT_TOL && poly_ok) {
        Ok(())
    } else {
        Err(format!(
            "b = beta = {b} and gamma sigma^b = {} <= d = {d}; the ratio does not decay",
            gamma * sigma.powf(beta)
        ))
    }
}

/// A full problem instance: `Y = X + ξ` observed, target `W = X + σ η`, `η ~ g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    n: u64,
    sigma: f64,
    x_model: CharacteristicModel,
    xi_model: CharacteristicModel,
    g_model: CharacteristicModel,
    sobolev: SobolevSpec,
}

impl Scenario {
    pub fn new(
        n: u64,
        sigma: f64,
        x_model: CharacteristicModel,
        xi_model: CharacteristicModel,
        g_model: CharacteristicModel,
        sobolev: SobolevSpec,
    ) -> Result<Self> {
        let scenario = Self {
            n,
            sigma,
            x_model,
            xi_model,
            g_model,
            sobolev,
        };
        scenario.validate_structure()?;
        let norm = sobolev_norm_sq(&x_model, sobolev.k);
        let bound = sobolev.radius * sobolev.radius;
        if !(norm <= bound * (1.0 + 1e-6)) {
            return Err(DeconvError::InvalidScenario(format!(
                "f_X is not in the Sobolev ball S(k = {}, B = {}): squared norm {norm:.6e} > B^2 = {bound:.6e}",
                sobolev.k, sobolev.radius
            )));
        }
        Ok(scenario)
    }

    /// Convenience constructor from families.
    pub fn from_families(
        n: u64,
        sigma: f64,
        x: Family,
        xi: Family,
        g: Family,
        sobolev: SobolevSpec,
    ) -> Result<Self> {
        Self::new(
            n,
            sigma,
            CharacteristicModel::new(x)?,
            CharacteristicModel::new(xi)?,
            CharacteristicModel::new(g)?,
            sobolev,
        )
    }

    fn validate_structure(&self) -> Result<()> {
        if self.n == 0 {
            return Err(DeconvError::param("n", "sample size must be positive"));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(DeconvError::param("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if self.x_model.envelope_exempt() {
            return Err(DeconvError::param("x_model", "f_X must be a proper density"));
        }
        if let Some(limit) = sigma_upper_limit(self.xi_model.envelope(), self.g_model.envelope()) {
            if self.sigma >= limit {
                return Err(DeconvError::InvalidScenario(format!(
                    "sigma = {} violates the small-sigma condition sigma < 0.5 (d/gamma)^(1/b) = {limit}",
                    self.sigma
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> u64 {
        self.n
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn x_model(&self) -> &CharacteristicModel {
        &self.x_model
    }
    pub fn xi_model(&self) -> &CharacteristicModel {
        &self.xi_model
    }
    pub fn g_model(&self) -> &CharacteristicModel {
        &self.g_model
    }
    pub fn sobolev(&self) -> SobolevSpec {
        self.sobolev
    }

    /// Same models with a different sample size.
    pub fn with_n(&self, n: u64) -> Result<Self> {
        let s = Self { n, ..*self };
        s.validate_structure()?;
        Ok(s)
    }

    /// Same models with a different Berkson scale.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        let s = Self { sigma, ..*self };
        s.validate_structure()?;
        Ok(s)
    }

    /// `g*(σ s) / f_ξ*(s)` evaluated through log-magnitudes (all shipped
    /// families have real, positive characteristic functions).
    pub fn blur_ratio(&self, s: f64) -> Complex64 {
        let g = self.g_model.cf(self.sigma * s);
        let xi = self.xi_model.cf(s);
        let ln_mag = self.g_model.ln_abs_cf(self.sigma * s) - self.xi_model.ln_abs_cf(s);
        Complex64::from_polar(ln_mag.exp(), g.arg() - xi.arg())
    }

    /// `f_W*(s) = f_X*(s) g*(σ s)`.
    pub fn target_cf(&self, s: f64) -> Complex64 {
        self.x_model.cf(s) * self.g_model.cf(self.sigma * s)
    }

    /// `f_Y*(s) = f_X*(s) f_ξ*(s)`.
    pub fn observed_cf(&self, s: f64) -> Complex64 {
        self.x_model.cf(s) * self.xi_model.cf(s)
    }

    /// Berkson error density `f_η(x) = σ⁻¹ g(x / σ)`.
    pub fn berkson_density(&self, x: f64) -> Option<f64> {
        self.g_model.density(x / self.sigma).map(|v| v / self.sigma)
    }
}

/// Upper limit on σ from the small-σ condition, when both `d` and `γ` are positive.
pub fn sigma_upper_limit(xi: &SmoothnessEnvelope, g: &SmoothnessEnvelope) -> Option<f64> {
    if xi.exp_scale > 0.0 && g.exp_scale > 0.0 {
        Some(0.5 * (xi.exp_scale / g.exp_scale).powf(1.0 / xi.exp_exp))
    } else {
        None
    }
}

/// `rho^2(σ) = ∫ |g*(σw) / f_ξ*(w)|² dw`: classified analytically, then
/// evaluated by adaptive quadrature truncated at `1e-12` of the peak.
pub fn rho_squared(scenario: &Scenario) -> RhoSquared {
    if let Err(reason) = rho_squared_finite(
        scenario.xi_model().envelope(),
        scenario.g_model().envelope(),
        scenario.sigma(),
    ) {
        return RhoSquared::Infinite(reason);
    }
    let sigma = scenario.sigma();
    let (g, xi) = (scenario.g_model(), scenario.xi_model());
    let ln_f = |w: f64| 2.0 * (g.ln_abs_cf(sigma * w) - xi.ln_abs_cf(w));
    match integrate_half_line(ln_f, RHO_CUTOFF) {
        Ok(r) => RhoSquared::Finite(2.0 * r.value()),
        Err(e) => RhoSquared::Infinite(format!("quadrature failed: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn model(f: Family) -> CharacteristicModel {
        CharacteristicModel::new(f).unwrap()
    }

    #[test]
    fn cf_examples() {
        let c = cf_eval(&model(Family::Gaussian { scale: 1.0 }), 0.0);
        assert_eq!(c, Complex64::new(1.0, 0.0));
        let c = cf_eval(&model(Family::Laplace { scale: 1.0 }), 2.0);
        assert!((c.re - 0.2).abs() < 1e-15 && c.im == 0.0);
        let c = cf_eval(&model(Family::ExpPower { scale: 1.0, exponent: 1.0 }), 3.0);
        assert!((c.re - (-3.0f64).exp()).abs() < 1e-15);
        assert!((c.re - 0.049787).abs() < 1e-6);
    }

    #[test]
    fn envelope_rules() {
        assert!(SmoothnessEnvelope::new(2.0, 1.0, 1.0, 0.0, 0.0).is_err());
        assert!(SmoothnessEnvelope::new(1.0, 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(SmoothnessEnvelope::new(1.0, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(SmoothnessEnvelope::new(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(SmoothnessEnvelope::new(1.0, 1.0, 0.0, 2.0, 0.5).is_ok());
    }

    #[test]
    fn envelope_constants_fitted() {
        let m = model(Family::Laplace { scale: 2.0 });
        let env = m.envelope();
        assert_eq!((env.poly_exp, env.exp_exp), (2.0, 0.0));
        // (1 + s^2) / (1 + 4 s^2) ranges over (1/4, 1] on the audit grid
        assert!((env.c_upper - 1.0).abs() < 1e-12);
        assert!(env.c_lower > 0.25 && env.c_lower < 0.2501);
        let g = model(Family::Gaussian { scale: 1.0 });
        assert_eq!(g.envelope().exp_scale, 0.5);
        assert!((g.envelope().c_lower - 1.0).abs() < 1e-12);
        assert!(model(Family::Identity).envelope_exempt());
    }

    #[test]
    fn sobolev_closed_forms() {
        let lap = sobolev_norm_sq(&model(Family::Laplace { scale: 1.0 }), 0.0);
        assert!((lap / (PI / 2.0) - 1.0).abs() < 1e-6, "{lap}");
        let gau = sobolev_norm_sq(&model(Family::Gaussian { scale: 1.0 }), 0.0);
        assert!((gau / PI.sqrt() - 1.0).abs() < 1e-6, "{gau}");
        assert!(sobolev_norm_sq(&model(Family::Laplace { scale: 1.0 }), 2.0).is_infinite());
        assert!(sobolev_norm_sq(&model(Family::Laplace { scale: 1.0 }), 1.5).is_infinite());
        // ∫ exp(-s^2)(1 + s^2) ds = 1.5 sqrt(pi)
        let g1 = sobolev_norm_sq(&model(Family::Gaussian { scale: 1.0 }), 1.0);
        assert!((g1 / (1.5 * PI.sqrt()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rho_squared_classification_examples() {
        let sob = SobolevSpec::new(1.0, 2.0).unwrap();
        let x = Family::Gaussian { scale: 1.0 };
        let laplace = Family::Laplace { scale: 1.0 };
        let gauss = Family::Gaussian { scale: 1.0 };
        let s = Scenario::from_families(100, 0.5, x, laplace, gauss, sob).unwrap();
        match rho_squared(&s) {
            // ∫ (1 + w^2)^2 exp(-σ² w²) dw = sqrt(pi/c)(1 + 1/c + 3/(4c^2)), c = σ²
            RhoSquared::Finite(v) => {
                let c: f64 = 0.25;
                let exact = (PI / c).sqrt() * (1.0 + 1.0 / c + 0.75 / (c * c));
                assert!((v / exact - 1.0).abs() < 1e-8, "{v} vs {exact}");
            }
            other => panic!("expected finite, got {other:?}"),
        }
        let s = Scenario::from_families(100, 0.5, x, gauss, laplace, sob).unwrap();
        assert!(!rho_squared(&s).is_finite());
        let s = Scenario::from_families(100, 0.5, x, laplace, laplace, sob).unwrap();
        assert!(!rho_squared(&s).is_finite());
    }

    #[test]
    fn small_sigma_condition_enforced() {
        let sob = SobolevSpec::new(1.0, 2.0).unwrap();
        let g = Family::Gaussian { scale: 1.0 };
        // d = 1/2, gamma = 1/2, b = 2: sigma < 0.5
        assert!(Scenario::from_families(10, 0.49, g, g, g, sob).is_ok());
        assert!(Scenario::from_families(10, 0.5, g, g, g, sob).is_err());
    }

    #[test]
    fn sobolev_membership_enforced() {
        let g = Family::Gaussian { scale: 1.0 };
        // norm^2 = 1.5 sqrt(pi) = 2.659
        assert!(Scenario::from_families(10, 0.1, g, g, g, SobolevSpec::new(1.0, 1.6).unwrap()).is_err());
        assert!(Scenario::from_families(10, 0.1, g, g, g, SobolevSpec::new(1.0, 1.7).unwrap()).is_ok());
    }

    #[test]
    fn densities_integrate_to_one() {
        let families = [
            Family::Gaussian { scale: 0.7 },
            Family::Laplace { scale: 1.3 },
            Family::SymmetricGamma { scale: 0.7, order: 0.8 },
            Family::SymmetricGamma { scale: 1.0, order: 2.0 },
            Family::ExpPower { scale: 1.0, exponent: 1.5 },
            Family::ExpPower { scale: 0.5, exponent: 2.0 },
        ];
        for f in families {
            let r = integrate(|x| f.density(x).unwrap(), -60.0, 60.0, 1e-10, 1e-9, 4000);
            // stable tails are heavy; only the exponent-2 law is light tailed
            let tol = if matches!(f, Family::ExpPower { exponent, .. } if exponent < 2.0) { 2e-2 } else { 1e-6 };
            assert!((r.value - 1.0).abs() < tol, "{f:?}: {}", r.value);
        }
        // order 1 reduces to Laplace
        let sg = Family::SymmetricGamma { scale: 1.0, order: 1.0 };
        let lap = Family::Laplace { scale: 1.0 };
        for x in [0.0, 0.3, 2.0, 7.5] {
            assert!((sg.density(x).unwrap() - lap.density(x).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn samplers_match_second_moments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let cases = [
            (Family::Gaussian { scale: 1.5 }, 2.25),
            (Family::Laplace { scale: 1.0 }, 2.0),
            (Family::SymmetricGamma { scale: 0.7, order: 0.8 }, 2.0 * 0.8 * 0.49),
            (Family::ExpPower { scale: 0.5, exponent: 2.0 }, 1.0),
        ];
        for (f, var) in cases {
            let m2: f64 = (0..n).map(|_| f.sample(&mut rng).powi(2)).sum::<f64>() / n as f64;
            assert!((m2 / var - 1.0).abs() < 0.03, "{f:?}: {m2} vs {var}");
        }
    }

    #[test]
    fn stable_sampler_matches_cf() {
        // empirical cf of exp(-|s|^1.5) at a few frequencies
        let f = Family::ExpPower { scale: 1.0, exponent: 1.5 };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..100_000).map(|_| f.sample(&mut rng)).collect();
        for s in [0.5, 1.0, 2.0] {
            let emp = xs.iter().map(|x| (s * x).cos()).sum::<f64>() / xs.len() as f64;
            assert!((emp - f.cf(s).re).abs() < 0.01, "s = {s}: {emp}");
        }
    }
}
