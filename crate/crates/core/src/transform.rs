//! Forward and inverse intensity/chromaticity transform.
//!
//! For a pixel `I` and baseline value `B` (the max, min or mean channel):
//!
//! ```text
//! C_c = ln(I_c + eps) - ln(B + eps)
//! I_c = (B + eps) * exp(C_c) - eps
//! ```
//!
//! With the max baseline every `C_c <= 0` and the envelope channel is exactly
//! zero, which is what the output constraints rely on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IcdError, Result};
use crate::image::{ChromaticityMap, Epsilon, IntensityMap, RgbImage};

/// Which per-pixel channel statistic serves as the intensity component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    #[default]
    Max,
    Min,
    Ave,
}

impl Baseline {
    pub const ALL: [Baseline; 3] = [Baseline::Max, Baseline::Min, Baseline::Ave];

    #[inline]
    pub fn of(self, px: [f64; 3]) -> f64 {
        match self {
            Baseline::Max => px[0].max(px[1]).max(px[2]),
            Baseline::Min => px[0].min(px[1]).min(px[2]),
            Baseline::Ave => (px[0] + px[1] + px[2]) / 3.0,
        }
    }

    /// Only the max baseline yields a non-positive, zero-anchored chromaticity.
    #[inline]
    pub fn is_constrained(self) -> bool {
        matches!(self, Baseline::Max)
    }

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Max => "max",
            Baseline::Min => "min",
            Baseline::Ave => "ave",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = IcdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Baseline::Max),
            "min" => Ok(Baseline::Min),
            "ave" | "avg" | "mean" => Ok(Baseline::Ave),
            other => Err(IcdError::Config(format!(
                "unknown baseline {other:?}; expected one of max, min, ave"
            ))),
        }
    }
}

/// Intensity and chromaticity components of one image.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledImage {
    intensity: IntensityMap,
    chroma: ChromaticityMap,
    baseline: Baseline,
}

impl DecoupledImage {
    pub fn new(intensity: IntensityMap, chroma: ChromaticityMap, baseline: Baseline) -> Result<Self> {
        if intensity.dims() != chroma.dims() {
            return Err(IcdError::dims(intensity.dims(), chroma.dims()));
        }
        Ok(DecoupledImage {
            intensity,
            chroma,
            baseline,
        })
    }

    #[inline]
    pub fn intensity(&self) -> &IntensityMap {
        &self.intensity
    }

    #[inline]
    pub fn chroma(&self) -> &ChromaticityMap {
        &self.chroma
    }

    #[inline]
    pub fn baseline(&self) -> Baseline {
        self.baseline
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.intensity.dims()
    }

    pub fn into_parts(self) -> (IntensityMap, ChromaticityMap, Baseline) {
        (self.intensity, self.chroma, self.baseline)
    }
}

#[inline]
pub(crate) fn chroma_of(px: [f64; 3], base: f64, eps: f64) -> [f64; 3] {
    let log_base = (base + eps).ln();
    px.map(|v| (v + eps).ln() - log_base)
}

#[inline]
pub(crate) fn invert_pixel(base: f64, chroma: [f64; 3], eps: f64) -> [f64; 3] {
    chroma.map(|c| (base + eps) * c.exp() - eps)
}

/// Splits an image into its intensity envelope (or min/mean baseline) and
/// per-channel log-chromaticity.
pub fn decompose(img: &RgbImage, eps: Epsilon, baseline: Baseline) -> Result<DecoupledImage> {
    if img.is_empty() {
        return Err(IcdError::EmptyInput);
    }
    let eps = eps.get();
    let (width, height) = img.dims();
    let mut intensity = Vec::with_capacity(img.len());
    let mut chroma = Vec::with_capacity(img.len());
    for &px in img.pixels() {
        if px.iter().any(|v| !v.is_finite()) {
            return Err(IcdError::InvalidInput("non-finite pixel".into()));
        }
        let base = baseline.of(px);
        intensity.push(base);
        chroma.push(chroma_of(px, base, eps));
    }
    DecoupledImage::new(
        IntensityMap::new(width, height, intensity)?,
        ChromaticityMap::new(width, height, chroma)?,
        baseline,
    )
}

/// Closed-form inverse without any clipping. Values may leave `[0, 1]`.
pub fn reconstruct_unclipped(dec: &DecoupledImage, eps: Epsilon) -> Vec<[f64; 3]> {
    let eps = eps.get();
    dec.intensity
        .values()
        .iter()
        .zip(dec.chroma.values())
        .map(|(&base, &c)| invert_pixel(base, c, eps))
        .collect()
}

/// Closed-form inverse followed by clipping to `[0, 1]`.
pub fn reconstruct(dec: &DecoupledImage, eps: Epsilon) -> Result<RgbImage> {
    if dec.intensity.dims() != dec.chroma.dims() {
        return Err(IcdError::dims(dec.intensity.dims(), dec.chroma.dims()));
    }
    let (width, height) = dec.dims();
    RgbImage::from_clipped(width, height, reconstruct_unclipped(dec, eps))
}

/// `max(raw, eps)` elementwise.
pub fn constrain_intensity(raw: &IntensityMap, eps: Epsilon) -> IntensityMap {
    let eps = eps.get();
    raw.map(|v| v.max(eps))
}

/// `min(raw, 0)` elementwise.
pub fn constrain_chromaticity(raw: &ChromaticityMap) -> ChromaticityMap {
    let data = raw.values().iter().map(|px| px.map(|v| v.min(0.0))).collect();
    ChromaticityMap::new(raw.width(), raw.height(), data).expect("dims preserved")
}

/// Applies `max(I, eps)` and `min(C, 0)` to a max-baseline decomposition.
///
/// Afterwards every channel of the unclipped inverse stays at or below the
/// constrained intensity. Min and mean baselines are returned unchanged: their
/// chromaticity is legitimately positive, and flooring a zero minimum at `eps`
/// would rescale the remaining channels.
pub fn constrain(dec: &DecoupledImage, eps: Epsilon) -> DecoupledImage {
    if !dec.baseline.is_constrained() {
        return dec.clone();
    }
    DecoupledImage {
        intensity: constrain_intensity(&dec.intensity, eps),
        chroma: constrain_chromaticity(&dec.chroma),
        baseline: dec.baseline,
    }
}

pub fn reconstruct_constrained(dec: &DecoupledImage, eps: Epsilon) -> Result<RgbImage> {
    reconstruct(&constrain(dec, eps), eps)
}

/// Index of the envelope channel, lowest index among ties.
#[inline]
pub fn anchor_channel(px: [f64; 3]) -> usize {
    let mut best = 0;
    for c in 1..3 {
        if px[c] > px[best] {
            best = c;
        }
    }
    best
}
