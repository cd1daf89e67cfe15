//! Risk-bound evaluators: integrated squared bias, the eight-case variance
//! bound, the saddle-point objects behind it, a generic Laplace
//! approximation and the root of `e^m m^z = n`.
//!
//! Bounds are order-level statements, so every evaluator returns the bare
//! shape with unit constant; compare ratios, not absolute values.

use std::fmt;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};
use crate::quad::integrate;
use crate::spectral::{Scenario, SmoothnessEnvelope, EXPONENT_TOL};

/// Row of the variance table, decided by the two envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CaseId {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
}

impl CaseId {
    pub const ALL: [CaseId; 8] = [
        CaseId::I,
        CaseId::II,
        CaseId::III,
        CaseId::IV,
        CaseId::V,
        CaseId::VI,
        CaseId::VII,
        CaseId::VIII,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseId::I => "I",
            CaseId::II => "II",
            CaseId::III => "III",
            CaseId::IV => "IV",
            CaseId::V => "V",
            CaseId::VI => "VI",
            CaseId::VII => "VII",
            CaseId::VIII => "VIII",
        }
    }

    /// Ordinary-smooth blur (`b = 0`), where the threshold is polynomial in n.
    pub fn is_ordinary_smooth(&self) -> bool {
        matches!(self, CaseId::I | CaseId::II | CaseId::III | CaseId::IV)
    }

    /// Cases in which the variance bound has a finite `h → 0` limit.
    pub fn admits_zero_bandwidth(&self) -> bool {
        matches!(self, CaseId::I | CaseId::IV | CaseId::V)
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifies the pair `(a, b, d)` of `f_ξ` and `(α, β, γ)` of `g`.
pub fn classify_case(xi_env: &SmoothnessEnvelope, g_env: &SmoothnessEnvelope) -> CaseId {
    let (a, b) = (xi_env.poly_exp, xi_env.exp_exp);
    let (alpha, beta) = (g_env.poly_exp, g_env.exp_exp);
    let zero = |v: f64| v.abs() <= EXPONENT_TOL;
    match (zero(b), zero(beta)) {
        (true, true) => {
            let gap = alpha - (a + 0.5);
            if gap > EXPONENT_TOL {
                CaseId::I
            } else if gap.abs() <= EXPONENT_TOL {
                CaseId::II
            } else {
                CaseId::III
            }
        }
        (true, false) => CaseId::IV,
        (false, true) => CaseId::VII,
        (false, false) => {
            if (b - beta).abs() <= EXPONENT_TOL {
                CaseId::VI
            } else if beta > b {
                CaseId::V
            } else {
                CaseId::VIII
            }
        }
    }
}

/// Everything the closed-form bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: f64,
    pub sigma: f64,
    pub k: f64,
    pub xi_env: SmoothnessEnvelope,
    pub g_env: SmoothnessEnvelope,
}

impl BoundParams {
    pub fn new(n: f64, sigma: f64, k: f64, xi_env: SmoothnessEnvelope, g_env: SmoothnessEnvelope) -> Result<Self> {
        if !(n.is_finite() && n >= 1.0) {
            return Err(DeconvError::param("n", format!("must be at least 1, got {n}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(DeconvError::param("sigma", format!("must be positive, got {sigma}")));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(DeconvError::param("k", format!("must be positive, got {k}")));
        }
        Ok(Self {
            n,
            sigma,
            k,
            xi_env,
            g_env,
        })
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            n: s.n() as f64,
            sigma: s.sigma(),
            k: s.sobolev().k,
            xi_env: *s.xi_model().envelope(),
            g_env: *s.g_model().envelope(),
        }
    }

    pub fn with_n(&self, n: f64) -> Self {
        Self { n, ..*self }
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self { sigma, ..*self }
    }

    pub fn case(&self) -> CaseId {
        classify_case(&self.xi_env, &self.g_env)
    }

    /// `(a, b, d)` of the blur density.
    pub fn xi(&self) -> (f64, f64, f64) {
        (self.xi_env.poly_exp, self.xi_env.exp_exp, self.xi_env.exp_scale)
    }

    /// `(α, β, γ)` of the Berkson density.
    pub fn g(&self) -> (f64, f64, f64) {
        (self.g_env.poly_exp, self.g_env.exp_exp, self.g_env.exp_scale)
    }

    /// Case V branch point `(γβσ^β/(db))^{1/(β-b)}`, where `z_h = 1`.
    pub fn case_v_split(&self) -> Option<f64> {
        let (_, b, d) = self.xi();
        let (_, beta, gamma) = self.g();
        (self.case() == CaseId::V)
            .then(|| (gamma * beta * self.sigma.powf(beta) / (d * b)).powf(1.0 / (beta - b)))
    }
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h >= 0.0 {
        Ok(())
    } else {
        Err(DeconvError::param("h", format!("must be finite and nonnegative, got {h}")))
    }
}

/// Integrated squared bias shape (unit constant). Zero at `h = 0`.
pub fn bias_bound(p: &BoundParams, h: f64) -> Result<f64> {
    check_h(h)?;
    if h == 0.0 {
        return Ok(0.0);
    }
    let (alpha, beta, gamma) = p.g();
    let (sigma, k) = (p.sigma, p.k);
    if h < sigma {
        let ln = -2.0 * alpha * sigma.ln() + (2.0 * alpha + 2.0 * k) * h.ln() - 2.0 * gamma * (sigma / h).powf(beta);
        Ok(ln.exp())
    } else {
        Ok(h.powf(2.0 * k))
    }
}

/// The constant `2 C_g B² / π` dropped by [`bias_bound`].
pub fn bias_constant(g_env: &SmoothnessEnvelope, sobolev_radius: f64) -> f64 {
    2.0 * g_env.c_upper * sobolev_radius * sobolev_radius / PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceBound {
    pub ln_value: f64,
    pub value: f64,
    pub branch: String,
}

impl VarianceBound {
    fn new(ln_value: f64, branch: String) -> Self {
        Self {
            ln_value,
            value: ln_value.exp(),
            branch,
        }
    }
}

/// `κ = (db/(γβ))^{b/(β-b)} · d(β-b)/b`, for `β > b > 0`.
pub fn kappa(d: f64, b: f64, gamma: f64, beta: f64) -> f64 {
    (d * b / (gamma * beta)).powf(b / (beta - b)) * d * (beta - b) / b
}

/// `ln min((h/σ)^{2α}, 1)`.
fn ln_min_ratio(h: f64, sigma: f64, alpha: f64) -> f64 {
    (2.0 * alpha * (h / sigma).ln()).min(0.0)
}

/// Variance bound (unit constant) for the classified case.
pub fn variance_bound(p: &BoundParams, h: f64) -> Result<VarianceBound> {
    check_h(h)?;
    let case = p.case();
    if h == 0.0 && !case.admits_zero_bandwidth() {
        return Err(DeconvError::Inadmissible(format!(
            "case {case}: rho^2 is infinite (or the bound diverges as h -> 0); a positive bandwidth is required"
        )));
    }
    let (a, b, d) = p.xi();
    let (alpha, beta, gamma) = p.g();
    let sigma = p.sigma;
    let q = 2.0 * a + 1.0;
    // ln min(h^{-(2a+1)}, σ^{-(2a+1)})
    let ln_base = if h == 0.0 { -q * sigma.ln() } else { -q * h.max(sigma).ln() };
    let ln_h = h.ln();
    let out = match case {
        CaseId::I => VarianceBound::new(ln_base, format!("I: min(h^-{q}; sigma^-{q})")),
        CaseId::II => {
            let factor = (sigma / h).ln().max(1.0);
            VarianceBound::new(ln_base + factor.ln(), "II: min(h^-(2a+1); sigma^-(2a+1)) max(ln(sigma/h); 1)".into())
        }
        CaseId::III => {
            let factor = ((2.0 * a - 2.0 * alpha + 1.0) * (sigma / h).ln()).max(0.0);
            VarianceBound::new(
                ln_base + factor,
                "III: min(h^-(2a+1); sigma^-(2a+1)) max(1; (sigma/h)^(2a-2alpha+1))".into(),
            )
        }
        CaseId::IV => VarianceBound::new(ln_base, format!("IV: min(h^-{q}; sigma^-{q})")),
        CaseId::V => {
            let split = p.case_v_split().expect("case V");
            if h < split {
                let ln = kappa(d, b, gamma, beta) * sigma.powf(-beta * b / (beta - b))
                    + (beta * (b - 2.0) / (2.0 * (beta - b)) - 2.0 * alpha) * sigma.ln();
                VarianceBound::new(ln, format!("V: h < h_V = {split:.6e} (interior maximum)"))
            } else {
                let phi1 = 2.0 * d * h.powf(-b) - 2.0 * gamma * sigma.powf(beta) * h.powf(-beta);
                let ln = (b - q) * ln_h + phi1 + ln_min_ratio(h, sigma, alpha);
                VarianceBound::new(ln, format!("V: h >= h_V = {split:.6e} (boundary maximum)"))
            }
        }
        CaseId::VI => {
            let ln = (b - q) * ln_h + 2.0 * h.powf(-b) * (d - gamma * sigma.powf(b)) + ln_min_ratio(h, sigma, alpha);
            VarianceBound::new(ln, "VI: h^(b-2a-1) exp(2h^-b (d - gamma sigma^b)) min((h/sigma)^2alpha; 1)".into())
        }
        CaseId::VII | CaseId::VIII => {
            let ln = (b - q) * ln_h + 2.0 * d * h.powf(-b) + ln_min_ratio(h, sigma, alpha);
            VarianceBound::new(ln, format!("{case}: h^(b-2a-1) exp(2d h^-b) min((h/sigma)^2alpha; 1)"))
        }
    };
    if out.ln_value.is_nan() {
        return Err(DeconvError::Numeric(format!("variance bound is NaN at h = {h}")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskBound {
    pub delta1: f64,
    pub delta2: f64,
    /// `delta1 + delta2 / n`.
    pub total: f64,
    /// `ln total`, finite even when `delta2` overflows.
    pub ln_total: f64,
    pub case: CaseId,
    pub branch: String,
}

/// `Δ₁ + Δ₂/n` at bandwidth `h`.
pub fn risk_bound(p: &BoundParams, h: f64) -> Result<RiskBound> {
    let delta1 = bias_bound(p, h)?;
    let v = variance_bound(p, h)?;
    let ln_var = v.ln_value - p.n.ln();
    let ln_total = if delta1 > 0.0 { log_add(delta1.ln(), ln_var) } else { ln_var };
    Ok(RiskBound {
        delta1,
        delta2: v.value,
        total: delta1 + v.value / p.n,
        ln_total,
        case: p.case(),
        branch: v.branch,
    })
}

fn log_add(x: f64, y: f64) -> f64 {
    let (hi, lo) = if x > y { (x, y) } else { (y, x) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `(2π)⁻¹ ∫_{|s| < 1/h} |g*(σs)/f_ξ*(s)|² ds` by adaptive quadrature.
/// Returns `+inf` when the integrand overflows `f64`.
pub fn variance_integral(scenario: &Scenario, h: f64) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(DeconvError::param("h", "must be positive"));
    }
    let r = integrate(|s| scenario.blur_ratio(s).norm_sqr(), 0.0, 1.0 / h, 0.0, 1e-10, 2000);
    if !r.value.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(r.value / PI)
}

/// Saddle-point objects `φ(z|σ,h)`, `P(z|σ,h)` and `z_h` of the variance integral
/// `Δ₂ ≲ h^{-(2a+1)} ∫_0^1 P(z) exp(φ(z)) dz`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiProfile {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub h: f64,
    pub z_h: Option<f64>,
}

impl PhiProfile {
    pub fn phi(&self, z: f64) -> f64 {
        2.0 * self.d * z.powf(self.b) * self.h.powf(-self.b)
            - 2.0 * self.gamma * z.powf(self.beta) * (self.sigma / self.h).powf(self.beta)
    }

    pub fn phi1(&self, z: f64) -> f64 {
        let (b, beta) = (self.b, self.beta);
        2.0 * self.d * b * z.powf(b - 1.0) * self.h.powf(-b)
            - 2.0 * self.gamma * beta * z.powf(beta - 1.0) * (self.sigma / self.h).powf(beta)
    }

    pub fn phi2(&self, z: f64) -> f64 {
        let (b, beta) = (self.b, self.beta);
        2.0 * self.d * b * (b - 1.0) * z.powf(b - 2.0) * self.h.powf(-b)
            - 2.0 * self.gamma * beta * (beta - 1.0) * z.powf(beta - 2.0) * (self.sigma / self.h).powf(beta)
    }

    pub fn p(&self, z: f64) -> f64 {
        let r = self.sigma * z / self.h;
        (r * r + 1.0).powf(-self.alpha) * (z * z + self.h * self.h).powf(self.a)
    }
}

pub fn phi_profile(p: &BoundParams, h: f64) -> Result<PhiProfile> {
    if !(h.is_finite() && h > 0.0) {
        return Err(DeconvError::param("h", "must be positive"));
    }
    let (a, b, d) = p.xi();
    let (alpha, beta, gamma) = p.g();
    if b == 0.0 && beta == 0.0 {
        return Err(DeconvError::param("envelopes", "at least one exponential exponent must be positive"));
    }
    let z_h = (b > 0.0 && beta > 0.0 && (b - beta).abs() > EXPONENT_TOL)
        .then(|| (d * b / (gamma * beta) * p.sigma.powf(-beta)).powf(1.0 / (beta - b)) * h);
    Ok(PhiProfile {
        a,
        b,
        d,
        alpha,
        beta,
        gamma,
        sigma: p.sigma,
        h,
        z_h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceBranch {
    /// Stationary maximum: `e^Q P / sqrt|Q''|`.
    Interior,
    /// Maximum at an endpoint: `e^Q P / |Q'|`.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceResult {
    pub ln_value: f64,
    pub value: f64,
    pub branch: LaplaceBranch,
    pub z0: f64,
}

const GOLDEN_TOL: f64 = 1e-10;
const DEGENERATE_TOL: f64 = 1e-12;

/// Leading-order approximation of `∫ P(z) e^{Q(z)} dz` over `interval`
/// from the global maximum of `Q`.
pub fn laplace_approx<P, Q, Q1, Q2>(p: P, q: Q, q1: Q1, q2: Q2, interval: (f64, f64)) -> Result<LaplaceResult>
where
    P: Fn(f64) -> f64,
    Q: Fn(f64) -> f64,
    Q1: Fn(f64) -> f64,
    Q2: Fn(f64) -> f64,
{
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(DeconvError::param("interval", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    const SCAN: usize = 200;
    let step = (hi - lo) / SCAN as f64;
    let (mut best_i, mut best_q) = (0, f64::NEG_INFINITY);
    for i in 0..=SCAN {
        let v = q(lo + i as f64 * step);
        if v > best_q {
            best_q = v;
            best_i = i;
        }
    }
    // golden section on the neighbouring cells, then let endpoints override
    let (mut x0, mut x1) = (lo + best_i.saturating_sub(1) as f64 * step, (lo + (best_i + 1) as f64 * step).min(hi));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = x1 - ratio * (x1 - x0);
    let mut e = x0 + ratio * (x1 - x0);
    let (mut qc, mut qe) = (q(c), q(e));
    while x1 - x0 > GOLDEN_TOL {
        if qc > qe {
            x1 = e;
            e = c;
            qe = qc;
            c = x1 - ratio * (x1 - x0);
            qc = q(c);
        } else {
            x0 = c;
            c = e;
            qc = qe;
            e = x0 + ratio * (x1 - x0);
            qe = q(e);
        }
    }
    let mut z0 = 0.5 * (x0 + x1);
    for end in [lo, hi] {
        if q(end) >= q(z0) {
            z0 = end;
        }
    }
    let (d1, d2) = (q1(z0), q2(z0));
    if d1.abs() < DEGENERATE_TOL && d2.abs() < DEGENERATE_TOL {
        return Err(DeconvError::Numeric(format!(
            "degenerate maximum at z0 = {z0}: |Q'| and |Q''| both below {DEGENERATE_TOL:e}"
        )));
    }
    let margin = 1e-8 * (hi - lo);
    let inside = z0 > lo + margin && z0 < hi - margin;
    let branch = if inside || d1.abs() < DEGENERATE_TOL {
        LaplaceBranch::Interior
    } else {
        LaplaceBranch::Boundary
    };
    let pv = p(z0);
    let ln_p = if pv == 0.0 { f64::NEG_INFINITY } else { pv.abs().ln() };
    let ln_den = match branch {
        LaplaceBranch::Interior => {
            if d2.abs() < DEGENERATE_TOL {
                return Err(DeconvError::Numeric(format!("flat interior maximum at z0 = {z0}")));
            }
            0.5 * d2.abs().ln()
        }
        LaplaceBranch::Boundary => d1.abs().ln(),
    };
    let ln_value = q(z0) + ln_p - ln_den;
    Ok(LaplaceResult {
        ln_value,
        value: pv.signum() * ln_value.exp(),
        branch,
        z0,
    })
}

/// `h^{-(2a+1)} ·` the Laplace approximation of `∫_0^1 P e^φ dz`, the
/// mechanical counterpart of the variance bound for supersmooth cases.
pub fn variance_saddle(p: &BoundParams, h: f64) -> Result<LaplaceResult> {
    let prof = phi_profile(p, h)?;
    let lower = 1e-9;
    let mut r = laplace_approx(
        |z| prof.p(z),
        |z| prof.phi(z),
        |z| prof.phi1(z),
        |z| prof.phi2(z),
        (lower, 1.0),
    )?;
    r.ln_value -= (2.0 * prof.a + 1.0) * h.ln();
    r.value = r.ln_value.exp();
    Ok(r)
}

/// Root of `e^m m^z = n` by bisection (`n > e`).
pub fn solve_exp_eq(z: f64, n: f64) -> Result<f64> {
    if !(n.is_finite() && n > std::f64::consts::E) || !z.is_finite() {
        return Err(DeconvError::param("n", format!("need finite z and n > e, got z = {z}, n = {n}")));
    }
    let ln_n = n.ln();
    let f = |m: f64| m + z * m.ln() - ln_n;
    let lo = 1.0;
    let mut hi = ln_n + z.abs() * ln_n.ln() + 10.0;
    if f(lo) > 0.0 {
        return Err(DeconvError::Numeric(format!("no root of e^m m^{z} = {n} above m = 1")));
    }
    if f(hi) < 0.0 {
        hi *= 2.0;
        if f(hi) < 0.0 {
            return Err(DeconvError::Numeric(format!("no sign change for e^m m^{z} = {n} on [1, {hi}]")));
        }
    }
    let mut lo = lo;
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ln n - z ln ln n`.
pub fn exp_root_asymptotic(z: f64, n: f64) -> f64 {
    n.ln() - z * n.ln().ln()
}
