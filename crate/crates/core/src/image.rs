//! Pixel containers shared by every stage of the pipeline.
//!
//! All containers are row-major and store one entry per pixel. Channel values
//! are `f64`; 8- and 16-bit storage is normalized to the unit interval on load
//! and never gamma-linearized.

use serde::{Deserialize, Serialize};

use crate::error::{IcdError, Result};

/// Numerical stability constant added inside every logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Epsilon(f64);

impl Epsilon {
    pub const DEFAULT: f64 = 1e-4;

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Epsilon(value))
        } else {
            Err(IcdError::Domain(format!("epsilon must be > 0, got {value}")))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for Epsilon {
    fn default() -> Self {
        Epsilon(Self::DEFAULT)
    }
}

impl TryFrom<f64> for Epsilon {
    type Error = IcdError;

    fn try_from(value: f64) -> Result<Self> {
        Epsilon::new(value)
    }
}

impl From<Epsilon> for f64 {
    fn from(eps: Epsilon) -> f64 {
        eps.0
    }
}

/// An RGB observation with every channel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl RgbImage {
    /// Validates length, finiteness and the unit-interval range.
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        check_len(width, height, data.len())?;
        for (i, px) in data.iter().enumerate() {
            for &v in px {
                if !v.is_finite() {
                    return Err(IcdError::InvalidInput(format!(
                        "non-finite channel value at pixel {i}"
                    )));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(IcdError::InvalidInput(format!(
                        "channel value {v} at pixel {i} is outside [0, 1]"
                    )));
                }
            }
        }
        Ok(RgbImage {
            width,
            height,
            data,
        })
    }

    /// Builds an image from arbitrary finite values, clipping each channel to `[0, 1]`.
    pub fn from_clipped(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        let data = data
            .into_iter()
            .map(|px| px.map(|v| if v.is_nan() { v } else { v.clamp(0.0, 1.0) }))
            .collect();
        RgbImage::new(width, height, data)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        RgbImage::new(width, height, data)
    }

    pub fn filled(width: usize, height: usize, px: [f64; 3]) -> Result<Self> {
        RgbImage::new(width, height, vec![px; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }

    pub fn into_pixels(self) -> Vec<[f64; 3]> {
        self.data
    }

    /// Multiplies every channel by `s`, clipping the result into range.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        RgbImage::from_clipped(
            self.width,
            self.height,
            self.data.iter().map(|px| px.map(|v| v * s)).collect(),
        )
    }

    /// One channel as a contiguous plane.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.iter().map(|px| px[c]).collect()
    }
}

/// Single-channel map: the intensity envelope, or its constrained output.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl IntensityMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width, height, data.len())?;
        Ok(IntensityMap {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        IntensityMap {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        IntensityMap {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Per-pixel log-ratios against the baseline channel.
///
/// The container itself does not enforce `C <= 0`: residual updates, the
/// `Min` and `Ave` baselines all legitimately produce positive components.
/// Feasibility is established by [`crate::constrain_chromaticity`] and can be
/// queried with [`ChromaticityMap::is_non_positive`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChromaticityMap {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl ChromaticityMap {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        check_len(width, height, data.len())?;
        Ok(ChromaticityMap {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        ChromaticityMap {
            width,
            height,
            data: vec![[0.0; 3]; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn values(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn into_values(self) -> Vec<[f64; 3]> {
        self.data
    }

    pub fn is_non_positive(&self) -> bool {
        self.data.iter().flatten().all(|&v| v <= 0.0)
    }

    /// True when every pixel has a component within `tol` of zero.
    pub fn has_zero_anchor(&self, tol: f64) -> bool {
        self.data.iter().all(|px| px.iter().any(|v| v.abs() <= tol))
    }
}

fn check_len(width: usize, height: usize, len: usize) -> Result<()> {
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| IcdError::InvalidInput(format!("{width}x{height} overflows")))?;
    if expected != len {
        return Err(IcdError::len(expected, len));
    }
    Ok(())
}
