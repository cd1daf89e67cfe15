//! Quadrature primitives: adaptive Gauss–Kronrod (7/15) on finite intervals,
//! a half-line integrator for positive spectral integrands given through
//! their logarithm, and the uniform trapezoid rule.

use crate::error::{DeconvError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub converged: bool,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive G7/K15 quadrature of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate drops below `max(abs_tol, rel_tol * |I|)` or `max_intervals`
/// is reached; the latter is reported through `converged = false`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            abs_err: 0.0,
            converged: true,
        };
    }
    let (v, e) = kronrod15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if pieces.len() >= max_intervals {
            return QuadResult {
                value: total,
                abs_err: err,
                converged: false,
            };
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, v0, e0) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further in floating point
            pieces.push((lo, hi, v0, 0.0));
            err -= e0;
            continue;
        }
        let (v1, e1) = kronrod15(&f, lo, mid);
        let (v2, e2) = kronrod15(&f, mid, hi);
        total += v1 + v2 - v0;
        err += e1 + e2 - e0;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    // resum to shed the drift accumulated by incremental updates
    let value = pieces.iter().map(|p| p.2).sum();
    let abs_err = pieces.iter().map(|p| p.3).sum();
    QuadResult {
        value,
        abs_err,
        converged: true,
    }
}

/// Trapezoid rule for samples on a uniform grid with spacing `step`.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        len => {
            let inner: f64 = values[1..len - 1].iter().sum();
            step * (inner + 0.5 * (values[0] + values[len - 1]))
        }
    }
}

/// Value of a positive half-line integral, kept in log form so that
/// integrands such as `exp(2 d s^b - ...)` do not overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfLineIntegral {
    pub ln_value: f64,
    /// Truncation point past which the remainder was handled analytically.
    pub cutoff: f64,
    /// Contribution of `[cutoff, inf)` relative to the total.
    pub tail_fraction: f64,
}

impl HalfLineIntegral {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

const SCAN_LO_EXP: i32 = -6;
const SCAN_HI_EXP: i32 = 16;
const SCAN_PER_DECADE: i32 = 16;

/// Integrates a positive function over `[0, inf)` given `ln f`.
///
/// The log-integrand is scanned on a geometric grid to locate its peak
/// `M`; integration stops at the first grid point past the peak where
/// `ln f < M + ln(rel_cutoff)`. The remainder beyond the cutoff is added
/// from the local power-law decay `f(T) T / (q - 1)`, which is exact for
/// algebraic tails and negligible for exponential ones.
pub fn integrate_half_line<F: Fn(f64) -> f64>(ln_f: F, rel_cutoff: f64) -> Result<HalfLineIntegral> {
    let ln_cut = rel_cutoff.ln();
    let scan: Vec<f64> = (SCAN_LO_EXP * SCAN_PER_DECADE..=SCAN_HI_EXP * SCAN_PER_DECADE)
        .map(|i| 10f64.powf(i as f64 / SCAN_PER_DECADE as f64))
        .collect();
    let ln_vals: Vec<f64> = scan.iter().map(|&s| ln_f(s)).collect();
    let (peak_idx, peak) = ln_vals
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| DeconvError::Numeric("half-line integrand is nowhere finite".into()))?;
    let ln_f0 = ln_f(0.0);
    let peak = if ln_f0.is_finite() { peak.max(ln_f0) } else { peak };
    let cut_idx = (peak_idx + 1..scan.len())
        .find(|&i| ln_vals[i] < peak + ln_cut)
        .ok_or_else(|| {
            DeconvError::Numeric("half-line integrand does not decay within the scan range".into())
        })?;
    let cutoff = scan[cut_idx];

    let scaled = |s: f64| (ln_f(s) - peak).exp();
    let mut total = integrate(&scaled, 0.0, scan[0], 0.0, 1e-12, 200).value;
    let mut lo = scan[0];
    let mut i = 4;
    loop {
        let hi = scan[i.min(cut_idx)];
        total += integrate(&scaled, lo, hi, 1e-300, 1e-11, 400).value;
        lo = hi;
        if i >= cut_idx {
            break;
        }
        i += 4;
    }

    let step = 1.05f64;
    let ln_t = ln_f(cutoff);
    let q = -(ln_f(cutoff * step) - ln_t) / step.ln();
    let tail = if q > 1.0 + 1e-9 {
        (ln_t - peak).exp() * cutoff / (q - 1.0)
    } else {
        return Err(DeconvError::Numeric(format!(
            "half-line integrand decays like s^-{q:.3}, not integrable"
        )));
    };
    total += tail;
    Ok(HalfLineIntegral {
        ln_value: peak + total.ln(),
        cutoff,
        tail_fraction: tail / total,
    })
}
