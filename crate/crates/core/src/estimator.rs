//! Empirical characteristic function, direct and sinc-kernel deconvolution
//! estimators by trapezoid Fourier inversion, the target density `f_W` and
//! integrated squared error.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DeconvError, Result};
use crate::quad::trapezoid;
use crate::spectral::{rho_squared, RhoSquared, Scenario};

/// Relative level of the ratio envelope at which the direct estimator is truncated.
pub const DIRECT_CUTOFF: f64 = 1e-10;
/// Relative level of `|f_W*|` at which the target inversion is truncated.
pub const TARGET_CUTOFF: f64 = 1e-14;
/// Largest tolerated imaginary residue of an inversion (sup norm).
pub const IMAG_RESIDUE_TOL: f64 = 1e-8;
/// A sinc band wider than `s_max` times this factor is refused.
pub const BAND_LIMIT_FACTOR: f64 = 1e3;

const REANCHOR: usize = 32;

/// Discretization of the x-axis and of the frequency axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    pub s_max: f64,
    pub s_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: -12.0,
            x_max: 12.0,
            x_points: 1024,
            s_max: 1000.0,
            s_points: 512,
        }
    }
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, x_points: usize, s_max: f64, s_points: usize) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            x_points,
            s_max,
            s_points,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(DeconvError::param("grid", "need finite x_min < x_max"));
        }
        if self.x_points < 16 {
            return Err(DeconvError::param("grid.x_points", "need at least 16 points"));
        }
        if self.s_points < 64 {
            return Err(DeconvError::param("grid.s_points", "need at least 64 points"));
        }
        if !(self.s_max.is_finite() && self.s_max > 0.0) {
            return Err(DeconvError::param("grid.s_max", "must be positive"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.x_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.x_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.x_points).map(|i| self.x(i)).collect()
    }

    /// Largest frequency step that keeps aliasing under control on this x-range.
    pub fn alias_step(&self) -> f64 {
        PI / (4.0 * self.x_min.abs().max(self.x_max.abs()))
    }

    /// Trapezoid nodes on `[lo, hi]`: at least `s_points` intervals and a
    /// step no larger than [`GridSpec::alias_step`].
    pub fn frequency_nodes(&self, lo: f64, hi: f64) -> FrequencyNodes {
        let width = hi - lo;
        let intervals = self.s_points.max((width / self.alias_step()).ceil() as usize).max(1);
        FrequencyNodes {
            lo,
            step: width / intervals as f64,
            intervals,
        }
    }
}

/// Uniform trapezoid nodes `lo + k·step`, `k = 0..=intervals`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyNodes {
    pub lo: f64,
    pub step: f64,
    pub intervals: usize,
}

impl FrequencyNodes {
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn s(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.step
    }

    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.intervals {
            0.5 * self.step
        } else {
            self.step
        }
    }
}

/// How the frequency band of an inversion was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationRule {
    /// Sinc kernel: `|s| ≤ 1/h`.
    SincBand,
    /// Direct estimator: ratio envelope below `rel` of its maximum (or `s_max`).
    RatioEnvelope { rel: f64, capped: bool },
    /// Target density: `|f_W*|` below `rel`.
    TargetCf { rel: f64, capped: bool },
    /// Explicit annulus `lo ≤ |s| ≤ hi`.
    Annulus { lo: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub sigma: f64,
    /// Number of samples (or the scenario's n for deterministic curves).
    pub n: u64,
    /// Upper end of the inverted band.
    pub truncation: f64,
    pub rule: TruncationRule,
    pub s_step: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub h: f64,
    pub meta: EstimateMeta,
}

impl DensityEstimate {
    /// Negative values set to zero. Not used by any risk computation.
    pub fn clipped(&self) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.max(0.0));
        out
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.values, self.grid.dx())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.grid.x(i), v)?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// `exp(i·t·s_k)` along uniform nodes by complex rotation, re-anchored
/// with an exact evaluation every few steps.
struct Phasor {
    t: f64,
    nodes: FrequencyNodes,
    rot: Complex64,
    cur: Complex64,
    k: usize,
}

impl Phasor {
    fn new(t: f64, nodes: FrequencyNodes) -> Self {
        Self {
            t,
            nodes,
            rot: Complex64::cis(t * nodes.step),
            cur: Complex64::cis(t * nodes.lo),
            k: 0,
        }
    }
}

impl Iterator for Phasor {
    type Item = Complex64;

    fn next(&mut self) -> Option<Complex64> {
        if self.k > self.nodes.intervals {
            return None;
        }
        if self.k % REANCHOR == 0 {
            self.cur = Complex64::cis(self.t * self.nodes.s(self.k));
        }
        let out = self.cur;
        self.cur *= self.rot;
        self.k += 1;
        Some(out)
    }
}

/// `n⁻¹ Σ exp(i s Y_j)`.
pub fn ecf(samples: &[f64], s: f64) -> Result<Complex64> {
    if samples.is_empty() {
        return Err(DeconvError::param("samples", "empty sample"));
    }
    let sum = samples.iter().fold(Complex64::new(0.0, 0.0), |acc, &y| acc + Complex64::cis(s * y));
    Ok(sum / samples.len() as f64)
}

/// The empirical characteristic function at every node. Each frequency's
/// sum runs over the samples in their given order.
pub fn ecf_on_nodes(samples: &[f64], nodes: FrequencyNodes) -> Result<Vec<Complex64>> {
    if samples.is_empty() {
        return Err(DeconvError::param("samples", "empty sample"));
    }
    let mut sums = vec![Complex64::new(0.0, 0.0); nodes.len()];
    for &y in samples {
        for (acc, e) in sums.iter_mut().zip(Phasor::new(y, nodes)) {
            *acc += e;
        }
    }
    let inv_n = 1.0 / samples.len() as f64;
    sums.iter_mut().for_each(|v| *v *= inv_n);
    Ok(sums)
}

/// `(2π)⁻¹ ∫_{lo ≤ |s| ≤ hi} e^{-isx} F(s) ds` on the x-grid, where the
/// closure returns `(F(s_k), F(-s_k))`.
fn invert_symmetric<F>(grid: &GridSpec, nodes: FrequencyNodes, spectrum: F) -> Result<Vec<f64>>
where
    F: Fn(usize) -> (Complex64, Complex64),
{
    let scale = 1.0 / (2.0 * PI);
    let coef: Vec<(Complex64, Complex64)> = (0..nodes.len())
        .map(|k| {
            let w = nodes.weight(k) * scale;
            let (pos, neg) = spectrum(k);
            (pos * w, neg * w)
        })
        .collect();
    let mut values = Vec::with_capacity(grid.x_points);
    let mut residue = 0.0f64;
    for i in 0..grid.x_points {
        let x = grid.x(i);
        let mut acc = Complex64::new(0.0, 0.0);
        for ((pos, neg), e) in coef.iter().zip(Phasor::new(x, nodes)) {
            acc += e.conj() * pos + e * neg;
        }
        residue = residue.max(acc.im.abs());
        values.push(acc.re);
    }
    if residue > IMAG_RESIDUE_TOL {
        return Err(DeconvError::Numeric(format!(
            "imaginary residue {residue:.3e} of the inversion exceeds {IMAG_RESIDUE_TOL:e}"
        )));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(DeconvError::Numeric(format!("non-finite inversion value {bad}")));
    }
    Ok(values)
}

/// First frequency past the peak at which the envelope of
/// `|g*(σs)/f_ξ*(s)|` drops below `rel` times its maximum.
pub fn ratio_envelope_cutoff(scenario: &Scenario, rel: f64) -> Result<f64> {
    let (xi, g) = (scenario.xi_model().envelope(), scenario.g_model().envelope());
    let sigma = scenario.sigma();
    let ln_env = |s: f64| g.ln_shape(sigma * s) - xi.ln_shape(s) + (g.c_upper / xi.c_lower).ln();
    first_drop(ln_env, rel.ln())
        .ok_or_else(|| DeconvError::Inadmissible("ratio envelope does not decay".into()))
}

/// First `s` past the peak of `ln_f` (scanned on a geometric grid) where
/// `ln_f(s) < peak + ln_rel`, refined by bisection.
fn first_drop<F: Fn(f64) -> f64>(ln_f: F, ln_rel: f64) -> Option<f64> {
    let mut peak = ln_f(0.0);
    let mut prev = 0.0;
    let mut s = 1e-6;
    while s < 1e16 {
        let v = ln_f(s);
        if v > peak {
            peak = v;
        } else if v < peak + ln_rel {
            let (mut lo, mut hi) = (prev, s);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if ln_f(mid) < peak + ln_rel {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        prev = s;
        s *= 1.02;
    }
    None
}

/// Deconvolution estimate of `f_W` from observations of `Y`.
///
/// `h > 0` uses the sinc kernel (band `|s| ≤ 1/h`); `h = 0` is the direct
/// estimator, available only when `rho^2` is finite.
pub fn estimate(samples: &[f64], scenario: &Scenario, h: f64, grid: &GridSpec) -> Result<DensityEstimate> {
    grid.validate()?;
    if samples.is_empty() {
        return Err(DeconvError::param("samples", "empty sample"));
    }
    if !(h.is_finite() && h >= 0.0) {
        return Err(DeconvError::param("h", format!("must be finite and nonnegative, got {h}")));
    }
    let (band, rule) = if h > 0.0 {
        let band = 1.0 / h;
        let limit = grid.s_max * BAND_LIMIT_FACTOR;
        if band > limit {
            return Err(DeconvError::Truncation { band, limit });
        }
        (band, TruncationRule::SincBand)
    } else {
        if let RhoSquared::Infinite(reason) = rho_squared(scenario) {
            return Err(DeconvError::Inadmissible(format!(
                "direct estimator (h = 0) requires a finite rho^2: {reason}"
            )));
        }
        let cut = ratio_envelope_cutoff(scenario, DIRECT_CUTOFF)?;
        let capped = cut > grid.s_max;
        (
            cut.min(grid.s_max),
            TruncationRule::RatioEnvelope {
                rel: DIRECT_CUTOFF,
                capped,
            },
        )
    };
    let nodes = grid.frequency_nodes(0.0, band);
    let phi = ecf_on_nodes(samples, nodes)?;
    let values = invert_symmetric(grid, nodes, |k| {
        let s = nodes.s(k);
        (phi[k] * scenario.blur_ratio(s), phi[k].conj() * scenario.blur_ratio(-s))
    })?;
    Ok(DensityEstimate {
        grid: *grid,
        values,
        h,
        meta: EstimateMeta {
            sigma: scenario.sigma(),
            n: samples.len() as u64,
            truncation: band,
            rule,
            s_step: nodes.step,
            intervals: nodes.intervals,
        },
    })
}

/// Inversion of the deconvolved ECF over the annulus `lo ≤ |s| ≤ hi`.
pub fn band_inversion(samples: &[f64], scenario: &Scenario, lo: f64, hi: f64, grid: &GridSpec) -> Result<DensityEstimate> {
    grid.validate()?;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(DeconvError::param("band", format!("need 0 <= lo < hi, got [{lo}, {hi}]")));
    }
    let nodes = grid.frequency_nodes(lo, hi);
    let phi = ecf_on_nodes(samples, nodes)?;
    let values = invert_symmetric(grid, nodes, |k| {
        let s = nodes.s(k);
        (phi[k] * scenario.blur_ratio(s), phi[k].conj() * scenario.blur_ratio(-s))
    })?;
    Ok(DensityEstimate {
        grid: *grid,
        values,
        h: if hi > 0.0 { 1.0 / hi } else { 0.0 },
        meta: EstimateMeta {
            sigma: scenario.sigma(),
            n: samples.len() as u64,
            truncation: hi,
            rule: TruncationRule::Annulus { lo },
            s_step: nodes.step,
            intervals: nodes.intervals,
        },
    })
}

fn target_band(scenario: &Scenario, grid: &GridSpec) -> Result<(f64, bool)> {
    let cut = first_drop(
        |s| scenario.x_model().ln_abs_cf(s) + scenario.g_model().ln_abs_cf(scenario.sigma() * s),
        TARGET_CUTOFF.ln(),
    )
    .ok_or_else(|| DeconvError::Numeric("target characteristic function does not decay".into()))?;
    Ok((cut.min(grid.s_max), cut > grid.s_max))
}

/// `f_W` on the grid, by inverting `f_X*(s) g*(σs)`.
pub fn true_fw(scenario: &Scenario, grid: &GridSpec) -> Result<DensityEstimate> {
    grid.validate()?;
    let (band, capped) = target_band(scenario, grid)?;
    let out = target_inversion(scenario, grid, band, TruncationRule::TargetCf { rel: TARGET_CUTOFF, capped }, 0.0)?;
    let mass = out.mass();
    if (mass - 1.0).abs() > 1e-3 {
        return Err(DeconvError::Numeric(format!(
            "target density integrates to {mass:.6} on [{}, {}]; widen or refine the grid",
            grid.x_min, grid.x_max
        )));
    }
    Ok(out)
}

/// The band-limited target `f_{W,h}`: inversion of `f_W*` over `|s| ≤ 1/h`,
/// the expectation of the sinc-kernel estimate.
pub fn band_limited_fw(scenario: &Scenario, h: f64, grid: &GridSpec) -> Result<DensityEstimate> {
    grid.validate()?;
    if !(h.is_finite() && h > 0.0) {
        return Err(DeconvError::param("h", "must be positive"));
    }
    let (full, _) = target_band(scenario, grid)?;
    target_inversion(scenario, grid, full.min(1.0 / h), TruncationRule::SincBand, h)
}

fn target_inversion(scenario: &Scenario, grid: &GridSpec, band: f64, rule: TruncationRule, h: f64) -> Result<DensityEstimate> {
    let nodes = grid.frequency_nodes(0.0, band);
    let values = invert_symmetric(grid, nodes, |k| {
        let s = nodes.s(k);
        (scenario.target_cf(s), scenario.target_cf(-s))
    })?;
    Ok(DensityEstimate {
        grid: *grid,
        values,
        h,
        meta: EstimateMeta {
            sigma: scenario.sigma(),
            n: scenario.n(),
            truncation: band,
            rule,
            s_step: nodes.step,
            intervals: nodes.intervals,
        },
    })
}

/// Trapezoid `∫ (a - b)² dx`.
pub fn ise(a: &DensityEstimate, b: &DensityEstimate) -> Result<f64> {
    let (ga, gb) = (&a.grid, &b.grid);
    if ga.x_min != gb.x_min || ga.x_max != gb.x_max || ga.x_points != gb.x_points {
        return Err(DeconvError::GridMismatch(format!(
            "[{}, {}]x{} vs [{}, {}]x{}",
            ga.x_min, ga.x_max, ga.x_points, gb.x_min, gb.x_max, gb.x_points
        )));
    }
    let sq: Vec<f64> = a.values.iter().zip(&b.values).map(|(u, v)| (u - v) * (u - v)).collect();
    Ok(trapezoid(&sq, ga.dx()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Family, SobolevSpec};

    fn scenario(xi: Family, g: Family, sigma: f64) -> Scenario {
        Scenario::from_families(
            100,
            sigma,
            Family::Gaussian { scale: 1.0 },
            xi,
            g,
            SobolevSpec::new(1.0, 2.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn ecf_examples() {
        assert_eq!(ecf(&[0.0, 0.0, 0.0], 5.0).unwrap(), Complex64::new(1.0, 0.0));
        let y = 0.37;
        let v = ecf(&[y], 2.5).unwrap();
        assert!((v - Complex64::cis(2.5 * y)).norm() < 1e-15);
        let ys = [0.3, -1.2, 2.2, 0.01];
        let (p, m) = (ecf(&ys, 1.7).unwrap(), ecf(&ys, -1.7).unwrap());
        assert!((p.conj() - m).norm() < 1e-15);
        assert!(ecf(&[], 1.0).is_err());
    }

    #[test]
    fn ecf_on_nodes_matches_direct() {
        let ys: Vec<f64> = (0..50).map(|i| ((i * 37) % 101) as f64 / 10.0 - 5.0).collect();
        let nodes = FrequencyNodes { lo: 0.5, step: 0.013, intervals: 300 };
        let fast = ecf_on_nodes(&ys, nodes).unwrap();
        for (k, v) in fast.iter().enumerate() {
            let direct = ecf(&ys, nodes.s(k)).unwrap();
            assert!((v - direct).norm() < 1e-13);
        }
    }

    #[test]
    fn true_fw_gaussian_closed_form() {
        let s = scenario(Family::Laplace { scale: 1.0 }, Family::Gaussian { scale: 1.0 }, 0.5);
        let grid = GridSpec::default();
        let fw = true_fw(&s, &grid).unwrap();
        let var: f64 = 1.25;
        let err = fw
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = grid.x(i);
                (v - (-x * x / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn true_fw_small_sigma_limit() {
        let s = scenario(Family::Laplace { scale: 1.0 }, Family::Gaussian { scale: 1.0 }, 1e-4);
        let grid = GridSpec::default();
        let fw = true_fw(&s, &grid).unwrap();
        let err = fw
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (v - s.x_model().density(grid.x(i)).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3);
    }

    #[test]
    fn true_fw_rejects_coarse_grid() {
        let s = scenario(Family::Laplace { scale: 1.0 }, Family::Gaussian { scale: 1.0 }, 0.5);
        let grid = GridSpec::new(-1.0, 1.0, 64, 1000.0, 64).unwrap();
        assert!(matches!(true_fw(&s, &grid), Err(DeconvError::Numeric(_))));
    }

    #[test]
    fn ise_examples() {
        let grid = GridSpec::new(-20.0, 20.0, 4001, 100.0, 64).unwrap();
        let mk = |sd: f64| DensityEstimate {
            grid,
            values: grid
                .xs()
                .iter()
                .map(|x| (-x * x / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt()))
                .collect(),
            h: 0.0,
            meta: EstimateMeta {
                sigma: 1.0,
                n: 1,
                truncation: 0.0,
                rule: TruncationRule::SincBand,
                s_step: 0.0,
                intervals: 0,
            },
        };
        let (a, b) = (mk(1.0), mk(2.0));
        assert_eq!(ise(&a, &a).unwrap(), 0.0);
        let exact = (1.0 + 0.5) / (2.0 * PI.sqrt()) - 2.0 / (10.0 * PI).sqrt();
        assert!((ise(&a, &b).unwrap() - exact).abs() < 1e-8);
        assert!((ise(&a, &b).unwrap() - 0.06631).abs() < 1e-4);
        assert_eq!(ise(&a, &b).unwrap(), ise(&b, &a).unwrap());
        let mut c = mk(1.0);
        c.grid.x_points = 4000;
        assert!(matches!(ise(&a, &c), Err(DeconvError::GridMismatch(_))));
    }

    #[test]
    fn direct_estimator_refused_when_rho_infinite() {
        let s = scenario(Family::Laplace { scale: 1.0 }, Family::Laplace { scale: 1.0 }, 0.5);
        let r = estimate(&[0.0, 1.0], &s, 0.0, &GridSpec::default());
        assert!(matches!(r, Err(DeconvError::Inadmissible(_))));
    }

    #[test]
    fn tiny_bandwidth_refused() {
        let s = scenario(Family::Laplace { scale: 1.0 }, Family::Gaussian { scale: 1.0 }, 0.5);
        let r = estimate(&[0.0], &s, 1e-7, &GridSpec::default());
        assert!(matches!(r, Err(DeconvError::Truncation { .. })));
    }

    #[test]
    fn csv_format() {
        let s = scenario(Family::Laplace { scale: 1.0 }, Family::Gaussian { scale: 1.0 }, 0.5);
        let grid = GridSpec::new(-8.0, 8.0, 16, 100.0, 64).unwrap();
        let est = estimate(&[0.0, 0.5], &s, 0.5, &grid).unwrap();
        let csv = est.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,value"));
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').next().unwrap(), "-8.0000000000000000e0");
        assert_eq!(csv.lines().count(), 17);
    }
}
