//! Checks for the structural properties of a max-baseline decomposition.

use serde::Serialize;

use crate::error::{IcdError, Result};
use crate::image::{Epsilon, RgbImage};
use crate::transform::{anchor_channel, chroma_of, Baseline, DecoupledImage};

/// Pixels whose channels all exceed `SIGNAL_FLOOR_FACTOR * eps` enter the
/// ratio and illumination checks.
pub const SIGNAL_FLOOR_FACTOR: f64 = 100.0;

const FLOAT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub pixels: usize,
    pub non_positive: bool,
    pub non_positive_violations: usize,
    pub zero_anchor: bool,
    pub zero_anchor_violations: usize,
    pub relative_ratio: bool,
    pub relative_ratio_checked: usize,
    pub relative_ratio_violations: usize,
    /// Largest `|C_c - ln(I_c / I_max)|` over checked pixels.
    pub relative_ratio_max_error: f64,
}

impl PropertyReport {
    pub fn all_hold(&self) -> bool {
        self.non_positive && self.zero_anchor && self.relative_ratio
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IlluminationReport {
    pub scale: f64,
    /// Pixels whose envelope channel index changed under scaling.
    pub anchor_changes: usize,
    pub checked: usize,
    pub violations: usize,
    pub max_difference: f64,
    /// Largest per-pixel analytic bound among the checked pixels.
    pub max_bound: f64,
}

impl IlluminationReport {
    pub fn holds(&self) -> bool {
        self.anchor_changes == 0 && self.violations == 0
    }
}

/// Verifies non-positivity, the zero anchor and the relative-ratio
/// approximation for `dec = decompose(img, eps, Max)`.
///
/// The ratio check uses the per-pixel bound
/// `0 <= C_c - ln(I_c / I_max) = ln(1 + eps/I_c) - ln(1 + eps/I_max) <= eps / I_c`.
pub fn check_properties(img: &RgbImage, dec: &DecoupledImage, eps: Epsilon) -> Result<PropertyReport> {
    if img.dims() != dec.dims() {
        return Err(IcdError::dims(img.dims(), dec.dims()));
    }
    if dec.baseline() != Baseline::Max {
        return Err(IcdError::Config("property checks require the max baseline".into()));
    }
    let eps = eps.get();
    let floor = SIGNAL_FLOOR_FACTOR * eps;

    let mut non_positive_violations = 0;
    let mut zero_anchor_violations = 0;
    let mut checked = 0;
    let mut ratio_violations = 0;
    let mut max_err: f64 = 0.0;

    for ((&px, &c), &envelope) in img
        .pixels()
        .iter()
        .zip(dec.chroma().values())
        .zip(dec.intensity().values())
    {
        non_positive_violations += c.iter().filter(|&&v| v > 0.0).count();
        if !c.iter().any(|v| v.abs() <= FLOAT_SLACK) {
            zero_anchor_violations += 1;
        }
        if px.iter().all(|&v| v >= floor) {
            checked += 1;
            let mut bad = false;
            for ch in 0..3 {
                let err = (c[ch] - (px[ch] / envelope).ln()).abs();
                max_err = max_err.max(err);
                if err > eps / px[ch] + FLOAT_SLACK {
                    bad = true;
                }
            }
            ratio_violations += usize::from(bad);
        }
    }

    Ok(PropertyReport {
        pixels: img.len(),
        non_positive: non_positive_violations == 0,
        non_positive_violations,
        zero_anchor: zero_anchor_violations == 0,
        zero_anchor_violations,
        relative_ratio: ratio_violations == 0,
        relative_ratio_checked: checked,
        relative_ratio_violations: ratio_violations,
        relative_ratio_max_error: max_err,
    })
}

/// Per-pixel bound on `|C(s*I) - C(I)|` for a pixel with smallest channel `min_channel`.
///
/// Both chromaticities deviate from `ln(I_c / I_max)` by a value in
/// `[0, eps / (scale * I_c)]`; summing the two one-sided terms bounds their difference.
#[inline]
pub fn illumination_bound(min_channel: f64, scale: f64, eps: f64) -> f64 {
    eps / (scale * min_channel) + eps / min_channel
}

/// Compares the chromaticity of `img` with that of `scale * img`.
///
/// The envelope channel index must be identical at every pixel. Chromaticity
/// differences are only bounded where every scaled channel is at least
/// `SIGNAL_FLOOR_FACTOR * eps`.
pub fn check_illumination_invariance(img: &RgbImage, scale: f64, eps: Epsilon) -> Result<IlluminationReport> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(IcdError::Domain(format!("scale must be in (0, 1], got {scale}")));
    }
    if img.is_empty() {
        return Err(IcdError::EmptyInput);
    }
    let eps = eps.get();
    let floor = SIGNAL_FLOOR_FACTOR * eps;
    let mut report = IlluminationReport {
        scale,
        anchor_changes: 0,
        checked: 0,
        violations: 0,
        max_difference: 0.0,
        max_bound: 0.0,
    };
    for &px in img.pixels() {
        let scaled = px.map(|v| v * scale);
        if anchor_channel(px) != anchor_channel(scaled) {
            report.anchor_changes += 1;
        }
        if scaled.iter().all(|&v| v >= floor) {
            report.checked += 1;
            let a = chroma_of(px, Baseline::Max.of(px), eps);
            let b = chroma_of(scaled, Baseline::Max.of(scaled), eps);
            let min_channel = Baseline::Min.of(px);
            let bound = illumination_bound(min_channel, scale, eps);
            report.max_bound = report.max_bound.max(bound);
            let diff = (0..3).map(|c| (a[c] - b[c]).abs()).fold(0.0, f64::max);
            report.max_difference = report.max_difference.max(diff);
            if diff > bound + FLOAT_SLACK {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}
