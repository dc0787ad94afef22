//! Noise propagation through the decoupled representation.
//!
//! Under `I = S + eta` with the envelope channel `m` unchanged by the noise,
//! a first-order expansion of the chromaticity gives
//!
//! ```text
//! C_c(I) - C_c(S) ~= eta_c / (S_c + eps) - eta_m / (S_m + eps)
//! ```
//!
//! [`monte_carlo_chroma_agreement`] compares this prediction with the exact
//! perturbation over many sampled noise fields.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{IcdError, Result};
use crate::image::{Epsilon, RgbImage};
use crate::transform::{anchor_channel, chroma_of, Baseline};

/// Additive zero-mean Gaussian noise with per-channel standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    sigma: [f64; 3],
}

impl NoiseModel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::per_channel([sigma; 3])
    }

    pub fn per_channel(sigma: [f64; 3]) -> Result<Self> {
        if sigma.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(IcdError::Domain(format!("noise sigma must be >= 0, got {sigma:?}")));
        }
        Ok(NoiseModel { sigma })
    }

    #[inline]
    pub fn sigma(&self) -> [f64; 3] {
        self.sigma
    }

    pub fn is_zero(&self) -> bool {
        self.sigma == [0.0; 3]
    }

    /// One noise vector per pixel.
    pub fn sample(&self, pixels: usize, rng: &mut impl rand::Rng) -> Vec<[f64; 3]> {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        (0..pixels)
            .map(|_| {
                let mut px = [0.0; 3];
                for (c, v) in px.iter_mut().enumerate() {
                    let z: f64 = normal.sample(rng);
                    *v = self.sigma[c] * z;
                }
                px
            })
            .collect()
    }
}

/// Linearized chromaticity perturbation for one noise field.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField {
    pub values: Vec<[f64; 3]>,
    /// Pixels where the noise moved the envelope to another channel. Their
    /// `values` entry is zero and they do not satisfy the expansion's premise.
    pub excluded: Vec<bool>,
}

impl PerturbationField {
    pub fn excluded_count(&self) -> usize {
        self.excluded.iter().filter(|&&e| e).count()
    }
}

#[inline]
fn linearized_pixel(clean: [f64; 3], eta: [f64; 3], m: usize, eps: f64) -> [f64; 3] {
    let anchor = eta[m] / (clean[m] + eps);
    let mut out = [0.0; 3];
    for c in 0..3 {
        out[c] = if c == m { 0.0 } else { eta[c] / (clean[c] + eps) - anchor };
    }
    out
}

/// `eta_c / (S_c + eps) - eta_m / (S_m + eps)` per pixel, `m` the lowest-index
/// envelope channel of the clean pixel.
pub fn linearized_chroma_perturbation(
    clean: &RgbImage,
    noise: &[[f64; 3]],
    eps: Epsilon,
) -> Result<PerturbationField> {
    if noise.len() != clean.len() {
        return Err(IcdError::len(clean.len(), noise.len()));
    }
    let eps = eps.get();
    let mut values = Vec::with_capacity(noise.len());
    let mut excluded = Vec::with_capacity(noise.len());
    for (&s, &eta) in clean.pixels().iter().zip(noise) {
        let m = anchor_channel(s);
        let noisy = [s[0] + eta[0], s[1] + eta[1], s[2] + eta[2]];
        if anchor_channel(noisy) != m {
            values.push([0.0; 3]);
            excluded.push(true);
        } else {
            values.push(linearized_pixel(s, eta, m, eps));
            excluded.push(false);
        }
    }
    Ok(PerturbationField { values, excluded })
}

/// Summary of a Monte-Carlo comparison between exact and linearized chroma noise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub trials: usize,
    pub pixels: usize,
    pub sigma: [f64; 3],
    pub seed: u64,
    pub mean_abs_exact: f64,
    pub mean_abs_predicted: f64,
    /// `sum |exact - predicted| / sum |exact|` over included samples.
    pub relative_error: f64,
    /// Fraction of pixel-trials where the envelope channel changed, or the
    /// noisy value dropped below `-eps`.
    pub excluded_fraction: f64,
    /// True when some clean channel is below ten noise standard deviations.
    pub low_signal: bool,
}

/// Samples `trials` noise fields (trial `t` uses seed `seed + t`) and compares
/// `C(S + eta) - C(S)` with the first-order prediction.
pub fn monte_carlo_chroma_agreement(
    clean: &RgbImage,
    model: &NoiseModel,
    trials: usize,
    eps: Epsilon,
    seed: u64,
) -> Result<AgreementReport> {
    if trials == 0 {
        return Err(IcdError::Config("trials must be >= 1".into()));
    }
    if clean.is_empty() {
        return Err(IcdError::EmptyInput);
    }
    let e = eps.get();
    let base: Vec<[f64; 3]> = clean
        .pixels()
        .iter()
        .map(|&s| chroma_of(s, Baseline::Max.of(s), e))
        .collect();
    let sigma = model.sigma();
    let low_signal = clean
        .pixels()
        .iter()
        .any(|px| (0..3).any(|c| px[c] < 10.0 * sigma[c]));

    let mut sum_exact = 0.0;
    let mut sum_pred = 0.0;
    let mut sum_diff = 0.0;
    let mut samples = 0usize;
    let mut excluded = 0usize;

    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let noise = model.sample(clean.len(), &mut rng);
        for ((&s, &eta), c0) in clean.pixels().iter().zip(&noise).zip(&base) {
            let noisy = [s[0] + eta[0], s[1] + eta[1], s[2] + eta[2]];
            let m = anchor_channel(s);
            if anchor_channel(noisy) != m || noisy.iter().any(|&v| v + e <= 0.0) {
                excluded += 1;
                continue;
            }
            let exact = chroma_of(noisy, noisy[m], e);
            let pred = linearized_pixel(s, eta, m, e);
            for c in 0..3 {
                let d_exact = exact[c] - c0[c];
                sum_exact += d_exact.abs();
                sum_pred += pred[c].abs();
                sum_diff += (d_exact - pred[c]).abs();
            }
            samples += 3;
        }
    }

    let total = trials * clean.len();
    let mean = |s: f64| if samples == 0 { 0.0 } else { s / samples as f64 };
    Ok(AgreementReport {
        trials,
        pixels: clean.len(),
        sigma,
        seed,
        mean_abs_exact: mean(sum_exact),
        mean_abs_predicted: mean(sum_pred),
        relative_error: if sum_exact > 0.0 { sum_diff / sum_exact } else { 0.0 },
        excluded_fraction: excluded as f64 / total as f64,
        low_signal,
    })
}

/// Linearized noise after the diagonal RGB enhancement `f(I) = g(x) * I`.
pub fn rgb_jacobian_amplification(gain: &[f64], noise: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    if gain.len() != noise.len() {
        return Err(IcdError::len(noise.len(), gain.len()));
    }
    if let Some(g) = gain.iter().find(|g| g.is_nan() || **g <= 0.0) {
        return Err(IcdError::Domain(format!("gain must be > 0, got {g}")));
    }
    Ok(gain.iter().zip(noise).map(|(&g, eta)| eta.map(|v| g * v)).collect())
}

/// A reflectance field lit by a per-pixel scalar illumination.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingScene {
    reflectance: RgbImage,
    illumination: Vec<f64>,
}

impl ScalingScene {
    pub fn new(reflectance: RgbImage, illumination: Vec<f64>) -> Result<Self> {
        if illumination.len() != reflectance.len() {
            return Err(IcdError::len(reflectance.len(), illumination.len()));
        }
        if let Some(l) = illumination.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(IcdError::Domain(format!("illumination must be > 0, got {l}")));
        }
        Ok(ScalingScene {
            reflectance,
            illumination,
        })
    }

    pub fn uniform(reflectance: RgbImage, illumination: f64) -> Result<Self> {
        let n = reflectance.len();
        Self::new(reflectance, vec![illumination; n])
    }

    pub fn reflectance(&self) -> &RgbImage {
        &self.reflectance
    }

    pub fn illumination(&self) -> &[f64] {
        &self.illumination
    }
}

/// `clip(L(x) R_c(x) + eta_c(x))`, deterministic given `seed`.
pub fn synthesize_scene(scene: &ScalingScene, model: &NoiseModel, seed: u64) -> Result<RgbImage> {
    let (w, h) = scene.reflectance.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if model.is_zero() {
        vec![[0.0; 3]; scene.reflectance.len()]
    } else {
        model.sample(scene.reflectance.len(), &mut rng)
    };
    let data = scene
        .reflectance
        .pixels()
        .iter()
        .zip(&scene.illumination)
        .zip(&noise)
        .map(|((r, &l), eta)| [l * r[0] + eta[0], l * r[1] + eta[1], l * r[2] + eta[2]])
        .collect();
    RgbImage::from_clipped(w, h, data)
}
