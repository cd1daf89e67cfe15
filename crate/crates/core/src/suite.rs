//! Canned scenarios: the eight-case matrix used for bound checks and the
//! Monte Carlo template for rate studies.

use serde::Serialize;

use crate::bandwidth::{log_grid, threshold};
use crate::error::Result;
use crate::risk::{variance_bound, variance_saddle, BoundParams, CaseId};
use crate::spectral::{sigma_upper_limit, CharacteristicModel, Family, Scenario, SobolevSpec};

/// Sample size of the matrix scenarios.
pub const MATRIX_N: u64 = 1_000_000;

/// `(f_ξ, g)` realising each case, with `f_X = N(0, 1)`, `k = 1`, `B = 2`.
pub fn case_families(case: CaseId) -> (Family, Family) {
    let laplace = Family::Laplace { scale: 1.0 };
    let xi_super = Family::Gaussian { scale: 1.5 };
    match case {
        CaseId::I => (laplace, Family::SymmetricGamma { scale: 1.0, order: 1.5 }),
        CaseId::II => (laplace, Family::SymmetricGamma { scale: 1.0, order: 1.25 }),
        CaseId::III => (laplace, laplace),
        CaseId::IV => (laplace, Family::Gaussian { scale: 1.0 }),
        CaseId::V => (Family::ExpPower { scale: 1.0, exponent: 1.0 }, Family::Gaussian { scale: 1.0 }),
        CaseId::VI => (xi_super, Family::Gaussian { scale: 0.5 }),
        CaseId::VII => (xi_super, laplace),
        CaseId::VIII => (xi_super, Family::ExpPower { scale: 0.5, exponent: 1.0 }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRegime {
    Above,
    Below,
    FarBelow,
}

impl SigmaRegime {
    pub const ALL: [SigmaRegime; 3] = [SigmaRegime::Above, SigmaRegime::Below, SigmaRegime::FarBelow];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixEntry {
    pub case: CaseId,
    pub regime: SigmaRegime,
    pub scenario: Scenario,
}

impl MatrixEntry {
    pub fn params(&self) -> BoundParams {
        BoundParams::from_scenario(&self.scenario)
    }
}

/// Scenario of `case` with σ placed in `regime` relative to the row threshold:
/// `min(4 thr, 0.9 σ_cap)`, `thr / 4` or `thr / 32`.
pub fn matrix_entry(case: CaseId, regime: SigmaRegime) -> Result<MatrixEntry> {
    let (xi, g) = case_families(case);
    let sob = SobolevSpec::new(1.0, 2.0)?;
    let probe = Scenario::from_families(MATRIX_N, 1e-3, Family::Gaussian { scale: 1.0 }, xi, g, sob)?;
    let thr = threshold(&BoundParams::from_scenario(&probe))?;
    let cap = sigma_upper_limit(probe.xi_model().envelope(), probe.g_model().envelope()).unwrap_or(1.0);
    let sigma = match regime {
        SigmaRegime::Above => (4.0 * thr).min(0.9 * cap),
        SigmaRegime::Below => thr / 4.0,
        SigmaRegime::FarBelow => thr / 32.0,
    };
    Ok(MatrixEntry {
        case,
        regime,
        scenario: probe.with_sigma(sigma)?,
    })
}

/// All 24 (case, regime) scenarios.
pub fn scenario_matrix() -> Result<Vec<MatrixEntry>> {
    CaseId::ALL
        .iter()
        .flat_map(|&c| SigmaRegime::ALL.iter().map(move |&r| matrix_entry(c, r)))
        .collect()
}

/// Monte Carlo template: ordinary-smooth Laplace blur (`a = 2`), Gaussian
/// Berkson density, and a rough `f_X` (difference of Gamma(0.8) variables,
/// scale 0.7) whose spectrum decays like `|s|^{-1.6}`, so it lies in the
/// `k = 1` Sobolev ball without being much smoother.
pub fn mc_template(n: u64, sigma: f64) -> Result<Scenario> {
    Scenario::from_families(
        n,
        sigma,
        Family::SymmetricGamma { scale: 0.7, order: 0.8 },
        Family::Laplace { scale: 1.0 },
        Family::Gaussian { scale: 1.0 },
        SobolevSpec::new(1.0, 6.0)?,
    )
}

/// One `(σ, h)` point of the saddle-point consistency sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddlePoint {
    pub case: CaseId,
    pub params: BoundParams,
    pub h: f64,
}

impl SaddlePoint {
    /// `variance_bound / (h^{-(2a+1)} · laplace_approx)`.
    pub fn ratio(&self) -> Result<f64> {
        let v = variance_bound(&self.params, self.h)?;
        let l = variance_saddle(&self.params, self.h)?;
        Ok((v.ln_value - l.ln_value).exp())
    }
}

fn sweep_params(xi: Family, g: Family, sigma: f64) -> Result<BoundParams> {
    BoundParams::new(
        MATRIX_N as f64,
        sigma,
        1.0,
        *CharacteristicModel::new(xi)?.envelope(),
        *CharacteristicModel::new(g)?.envelope(),
    )
}

/// 8×8 `(σ, h)` sweep for the supersmooth rows V–VIII.
///
/// Case V uses `a = α = 0` families and keeps `h` at least a factor 2 away
/// from the branch point on each side; case VIII keeps `h ≥ σ`, where the
/// tabulated exponent `2d h^{-b}` and the exact `φ(1)` differ by a bounded
/// factor.
pub fn saddle_sweep(case: CaseId) -> Result<Vec<SaddlePoint>> {
    let xi_gauss = Family::Gaussian { scale: 1.0 };
    let (xi, g, sigmas) = match case {
        CaseId::V => (
            Family::ExpPower { scale: 1.0, exponent: 1.0 },
            Family::Gaussian { scale: 1.0 },
            log_grid(0.05, 0.35, 8),
        ),
        CaseId::VI => (xi_gauss, Family::Gaussian { scale: 0.5 }, log_grid(0.05, 0.9, 8)),
        CaseId::VII => (xi_gauss, Family::SymmetricGamma { scale: 1.0, order: 0.5 }, log_grid(0.05, 0.9, 8)),
        CaseId::VIII => (xi_gauss, Family::ExpPower { scale: 0.5, exponent: 1.0 }, log_grid(0.02, 0.45, 8)),
        other => {
            return Err(crate::DeconvError::param(
                "case",
                format!("the saddle sweep covers rows V-VIII, not {other}"),
            ))
        }
    };
    let mut out = Vec::with_capacity(64);
    for sigma in sigmas {
        let params = sweep_params(xi, g, sigma)?;
        let hs: Vec<f64> = match case {
            CaseId::V => {
                let split = params.case_v_split().expect("case V");
                (1..=4)
                    .map(|j| split / 2f64.powi(j))
                    .chain((0..4).map(|j| 2.0 * split * 2f64.powi(j)))
                    .collect()
            }
            CaseId::VIII => log_grid(sigma, 1.0, 8),
            _ => log_grid(0.05, 1.0, 8),
        };
        out.extend(hs.into_iter().map(|h| SaddlePoint { case, params, h }));
    }
    Ok(out)
}
