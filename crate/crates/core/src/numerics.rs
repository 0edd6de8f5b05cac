//! Scalar special functions and error metrics.

use core::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for positive real arguments (Lanczos, g = 7, 9 terms).
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain { name: "x", value: x });
    }
    Ok(gamma_unchecked(x))
}

pub(crate) fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection keeps the series in its accurate half-plane
        PI / (libm::sin(PI * x) * gamma_unchecked(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEFFS[0];
        for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        libm::sqrt(2.0 * PI) * libm::pow(t, x + 0.5) * libm::exp(-t) * acc
    }
}

/// Pointwise comparison of a prediction against a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorMetrics {
    /// `‖pred − ref‖₂ / ‖ref‖₂`, or `‖pred‖₂` when the reference is identically zero.
    pub rel_l2: f64,
    pub max_abs: f64,
    pub n_points: usize,
}

pub fn error_metrics(predicted: &[f64], reference: &[f64]) -> Result<ErrorMetrics> {
    if predicted.len() != reference.len() {
        return Err(Error::DimensionMismatch { expected: reference.len(), found: predicted.len() });
    }
    if predicted.is_empty() {
        return Err(Error::invalid("error metrics need at least one point"));
    }
    let mut diff_sq = 0.0;
    let mut ref_sq = 0.0;
    let mut pred_sq = 0.0;
    let mut max_abs: f64 = 0.0;
    for (&p, &r) in predicted.iter().zip(reference) {
        let d = p - r;
        diff_sq += d * d;
        ref_sq += r * r;
        pred_sq += p * p;
        max_abs = max_abs.max(libm::fabs(d));
    }
    let rel_l2 = if ref_sq == 0.0 { libm::sqrt(pred_sq) } else { libm::sqrt(diff_sq) / libm::sqrt(ref_sq) };
    Ok(ErrorMetrics { rel_l2, max_abs, n_points: predicted.len() })
}

/// Least-squares slope of `ys` against `xs`.
pub(crate) fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
