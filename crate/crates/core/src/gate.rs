//! Intensity-aware chromaticity gate.
//!
//! `G(I) = alpha + (1 - alpha) * sin(pi * I / 2)^gamma` scales the
//! chromaticity of dark pixels toward zero while leaving bright pixels alone.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{IcdError, Result};
use crate::image::{ChromaticityMap, IntensityMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    alpha: f64,
    gamma: f64,
}

impl GateParams {
    pub const DEFAULT_ALPHA: f64 = 0.5;
    pub const DEFAULT_GAMMA: f64 = 2.0;
    pub const GAMMA_RANGE: (f64, f64) = (0.5, 4.0);

    /// Validates against the default exponent range.
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        Self::with_range(alpha, gamma, Self::GAMMA_RANGE)
    }

    pub fn with_range(alpha: f64, gamma: f64, (gamma_min, gamma_max): (f64, f64)) -> Result<Self> {
        if !(gamma_min > 0.0 && gamma_min <= gamma_max) {
            return Err(IcdError::Config(format!(
                "invalid gamma range [{gamma_min}, {gamma_max}]"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(IcdError::Domain(format!("gate alpha must be in (0, 1], got {alpha}")));
        }
        if !(gamma >= gamma_min && gamma <= gamma_max) {
            return Err(IcdError::Domain(format!(
                "gate gamma must be in [{gamma_min}, {gamma_max}], got {gamma}"
            )));
        }
        Ok(GateParams { alpha, gamma })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Gate value at intensity `i`; inputs outside `[0, 1]` are clamped first.
    #[inline]
    pub fn value(&self, i: f64) -> f64 {
        let i = i.clamp(0.0, 1.0);
        self.alpha + (1.0 - self.alpha) * (FRAC_PI_2 * i).sin().powf(self.gamma)
    }
}

impl Default for GateParams {
    fn default() -> Self {
        GateParams {
            alpha: Self::DEFAULT_ALPHA,
            gamma: Self::DEFAULT_GAMMA,
        }
    }
}

/// Multiplies each pixel's chromaticity by `G(I)` at that pixel.
pub fn chroma_gate(
    intensity: &IntensityMap,
    chroma: &ChromaticityMap,
    gate: &GateParams,
) -> Result<ChromaticityMap> {
    if intensity.dims() != chroma.dims() {
        return Err(IcdError::dims(intensity.dims(), chroma.dims()));
    }
    let data = intensity
        .values()
        .iter()
        .zip(chroma.values())
        .map(|(&i, c)| {
            let g = gate.value(i);
            c.map(|v| g * v)
        })
        .collect();
    ChromaticityMap::new(chroma.width(), chroma.height(), data)
}
