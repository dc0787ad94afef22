//! Full-reference metrics and the joint RGB / intensity / chromaticity loss.

use serde::{Deserialize, Serialize};

use crate::error::{IcdError, Result};
use crate::image::{Epsilon, RgbImage};
use crate::transform::{decompose, Baseline};

pub const PSNR_CAP_DB: f64 = 100.0;
pub const REL_MAE_DELTA: f64 = 1e-2;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_i: f64,
    pub lambda_c: f64,
    pub smooth_l1_beta: f64,
}

impl LossWeights {
    pub fn new(lambda_i: f64, lambda_c: f64, smooth_l1_beta: f64) -> Result<Self> {
        for (v, name) in [(lambda_i, "lambda_I"), (lambda_c, "lambda_C"), (smooth_l1_beta, "beta")] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(IcdError::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(LossWeights {
            lambda_i,
            lambda_c,
            smooth_l1_beta,
        })
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_i: 1500.0,
            lambda_c: 2500.0,
            smooth_l1_beta: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub l_rgb: f64,
    #[serde(rename = "l_I")]
    pub l_i: f64,
    #[serde(rename = "l_C")]
    pub l_c: f64,
    pub l_total: f64,
}

/// Metric set emitted per image pair; key names are part of the report schema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricsReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub mse: f64,
    pub rel_mae: f64,
    pub l_rgb: f64,
    #[serde(rename = "l_I")]
    pub l_i: f64,
    #[serde(rename = "l_C")]
    pub l_c: f64,
    pub l_total: f64,
}

impl MetricsReport {
    pub fn compute(out: &RgbImage, reference: &RgbImage, eps: Epsilon, weights: &LossWeights) -> Result<Self> {
        let loss = total_loss(out, reference, eps, weights)?;
        Ok(MetricsReport {
            psnr_db: psnr(out, reference)?,
            ssim: ssim(out, reference)?,
            mse: mse(out, reference)?,
            rel_mae: rel_mae(out, reference)?,
            l_rgb: loss.l_rgb,
            l_i: loss.l_i,
            l_c: loss.l_c,
            l_total: loss.l_total,
        })
    }
}

fn same_dims(a: &RgbImage, b: &RgbImage) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(IcdError::dims(a.dims(), b.dims()));
    }
    Ok(())
}

fn mean_abs_diff(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = a.zip(b).fold((0.0, 0usize), |(s, n), (x, y)| (s + (x - y).abs(), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn mse(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    same_dims(a, b)?;
    if a.is_empty() {
        return Err(IcdError::EmptyInput);
    }
    let sum: f64 = a
        .pixels()
        .iter()
        .flatten()
        .zip(b.pixels().iter().flatten())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / (a.len() * 3) as f64)
}

/// `10 log10(1 / MSE)` for unit-range images, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    psnr_with_cap(a, b, PSNR_CAP_DB)
}

pub fn psnr_with_cap(a: &RgbImage, b: &RgbImage, cap: f64) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(cap);
    }
    Ok((10.0 * (1.0 / m).log10()).min(cap))
}

/// Mean of `|out - ref| / (ref + 0.01)` over every channel sample.
pub fn rel_mae(out: &RgbImage, reference: &RgbImage) -> Result<f64> {
    same_dims(out, reference)?;
    if out.is_empty() {
        return Err(IcdError::EmptyInput);
    }
    let sum: f64 = out
        .pixels()
        .iter()
        .flatten()
        .zip(reference.pixels().iter().flatten())
        .map(|(o, r)| (o - r).abs() / (r + REL_MAE_DELTA))
        .sum();
    Ok(sum / (out.len() * 3) as f64)
}

/// Mean Smooth-L1 (Huber) loss with transition point `beta`.
pub fn smooth_l1(a: &[f64], b: &[f64], beta: f64) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).abs();
            if d < beta {
                0.5 * d * d / beta
            } else {
                d - 0.5 * beta
            }
        })
        .sum();
    sum / n as f64
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let r = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Separable Gaussian filter over the valid region only.
fn filter_valid(plane: &[f64], width: usize, height: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = width - SSIM_WINDOW + 1;
    let oh = height - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * height];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..ow {
            rows[y * ow + x] = k.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|j| k[j] * rows[(y + j) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM of two single-channel planes with dynamic range 1.
///
/// Uses an 11-tap Gaussian window (sigma 1.5) evaluated at every position
/// where the window fits entirely inside the image.
pub fn ssim_plane(a: &[f64], b: &[f64], width: usize, height: usize) -> Result<f64> {
    if a.len() != width * height || b.len() != width * height {
        return Err(IcdError::len(width * height, a.len().min(b.len())));
    }
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(IcdError::Dimension {
            expected: format!("at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM"),
            actual: format!("{width}x{height}"),
        });
    }
    let k = gaussian_kernel();
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);

    let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> { a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = filter_valid(a, width, height, &k);
    let mu_b = filter_valid(b, width, height, &k);
    let aa = filter_valid(&prod(|x, _| x * x), width, height, &k);
    let bb = filter_valid(&prod(|_, y| y * y), width, height, &k);
    let ab = filter_valid(&prod(|x, y| x * y), width, height, &k);

    let n = mu_a.len();
    let mut total = 0.0;
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = aa[i] - ma * ma;
        let vb = bb[i] - mb * mb;
        let cov = ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / n as f64)
}

/// Per-channel SSIM averaged over R, G and B.
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64> {
    same_dims(a, b)?;
    let (w, h) = a.dims();
    let mut sum = 0.0;
    for c in 0..3 {
        sum += ssim_plane(&a.channel(c), &b.channel(c), w, h)?;
    }
    Ok(sum / 3.0)
}

/// `L = L_rgb + lambda_I L_I + lambda_C L_C` with
///
/// * `L_rgb = mean|out - ref| + (1 - SSIM(out, ref))`
/// * `L_I   = mean|I_max(out) - I_max(ref)| + (1 - SSIM(I_max(out), I_max(ref)))`
/// * `L_C   = mean|C(out) - C(ref)|`
///
/// Both images are decomposed with the max baseline.
pub fn total_loss(out: &RgbImage, reference: &RgbImage, eps: Epsilon, weights: &LossWeights) -> Result<LossBreakdown> {
    same_dims(out, reference)?;
    let (w, h) = out.dims();
    let dec_out = decompose(out, eps, Baseline::Max)?;
    let dec_ref = decompose(reference, eps, Baseline::Max)?;

    let l_rgb = mean_abs_diff(
        out.pixels().iter().flatten().copied(),
        reference.pixels().iter().flatten().copied(),
    ) + (1.0 - ssim(out, reference)?);

    let (i_out, i_ref) = (dec_out.intensity().values(), dec_ref.intensity().values());
    let l_i = mean_abs_diff(i_out.iter().copied(), i_ref.iter().copied()) + (1.0 - ssim_plane(i_out, i_ref, w, h)?);

    let l_c = mean_abs_diff(
        dec_out.chroma().values().iter().flatten().copied(),
        dec_ref.chroma().values().iter().flatten().copied(),
    );

    Ok(LossBreakdown {
        l_rgb,
        l_i,
        l_c,
        l_total: l_rgb + weights.lambda_i * l_i + weights.lambda_c * l_c,
    })
}
