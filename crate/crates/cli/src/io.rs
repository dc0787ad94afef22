//! Image and float-map I/O.
//!
//! Display-range images load from 8/16-bit PNG or PPM/PGM and are normalized
//! by `v / 255` or `v / 65535`. Real-valued maps use PFM: little-endian `f32`,
//! scale `-1.0`, rows stored bottom to top.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use icd_core::RgbImage;
use image::{DynamicImage, ImageBuffer, Rgb};

pub const IMAGE_EXTENSIONS: &[&str] = &["png", "ppm", "pgm", "pnm"];

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).with_context(|| format!("cannot read image {}", path.display()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<[f64; 3]> = match img {
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => img
            .to_rgb16()
            .pixels()
            .map(|p| p.0.map(|v| v as f64 / 65535.0))
            .collect(),
        _ => img
            .to_rgb8()
            .pixels()
            .map(|p| p.0.map(|v| v as f64 / 255.0))
            .collect(),
    };
    Ok(RgbImage::new(w, h, data)?)
}

#[inline]
pub fn quantize8(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Writes an 8-bit RGB PNG.
pub fn save_png(img: &RgbImage, path: &Path) -> Result<()> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.pixels().iter().flat_map(|p| p.map(quantize8)).collect(),
    )
    .context("image buffer size")?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .with_context(|| format!("cannot write {}", path.display()))
}

/// A decoded portable float map.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Row-major, top row first, interleaved channels.
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PfmError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for PfmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PFM parse error at byte {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for PfmError {}

impl FloatMap {
    pub fn gray(width: usize, height: usize, data: Vec<f32>) -> Self {
        FloatMap {
            width,
            height,
            channels: 1,
            data,
        }
    }

    pub fn color(width: usize, height: usize, data: Vec<f32>) -> Self {
        FloatMap {
            width,
            height,
            channels: 3,
            data,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let tag = if self.channels == 3 { "PF" } else { "Pf" };
        let mut out = format!("{tag}\n{} {}\n-1.0\n", self.width, self.height).into_bytes();
        let row = self.width * self.channels;
        for y in (0..self.height).rev() {
            for v in &self.data[y * row..(y + 1) * row] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        FloatMap::parse(&bytes).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(bytes: &[u8]) -> std::result::Result<Self, PfmError> {
        let mut pos = 0;
        let mut token = |what: &str| -> std::result::Result<(usize, String), PfmError> {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(PfmError {
                    offset: start,
                    message: format!("expected {what}, found end of header"),
                });
            }
            let text = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
            Ok((start, text))
        };

        let (off, tag) = token("PF or Pf")?;
        let channels = match tag.as_str() {
            "PF" => 3,
            "Pf" => 1,
            _ => {
                return Err(PfmError {
                    offset: off,
                    message: format!("bad magic {tag:?}, expected PF or Pf"),
                })
            }
        };
        let mut dim = |what: &str| -> std::result::Result<usize, PfmError> {
            let (off, t) = token(what)?;
            t.parse::<usize>().map_err(|_| PfmError {
                offset: off,
                message: format!("invalid {what} {t:?}"),
            })
        };
        let width = dim("width")?;
        let height = dim("height")?;
        let (off, s) = token("scale")?;
        let scale: f32 = s.parse().map_err(|_| PfmError {
            offset: off,
            message: format!("invalid scale {s:?}"),
        })?;
        if scale == 0.0 || !scale.is_finite() {
            return Err(PfmError {
                offset: off,
                message: "scale must be a non-zero number".into(),
            });
        }
        // exactly one whitespace byte separates the header from the raster
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(PfmError {
                offset: pos,
                message: "missing separator after scale".into(),
            });
        }
        pos += 1;

        let count = width * height * channels;
        let need = count * 4;
        if bytes.len() - pos < need {
            return Err(PfmError {
                offset: bytes.len(),
                message: format!("raster truncated: need {need} bytes, have {}", bytes.len() - pos),
            });
        }
        let little = scale < 0.0;
        let raster = &bytes[pos..pos + need];
        let row = width * channels;
        let mut data = vec![0f32; count];
        for (i, chunk) in raster.chunks_exact(4).enumerate() {
            let b = [chunk[0], chunk[1], chunk[2], chunk[3]];
            let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
            let file_row = i / row;
            let y = height - 1 - file_row;
            data[y * row + i % row] = v;
        }
        Ok(FloatMap {
            width,
            height,
            channels,
            data,
        })
    }
}

/// Expands directories to their image files, sorted by name.
pub fn expand_inputs(inputs: &[PathBuf], extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("cannot list {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && has_extension(f, extensions))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() && !inputs.is_empty() {
        bail!("no matching files in {:?}", inputs);
    }
    Ok(out)
}

fn has_extension(p: &Path, extensions: &[&str]) -> bool {
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("").to_ascii_lowercase();
    extensions.iter().any(|e| name.ends_with(&format!(".{e}")))
}

/// File name without its final extension.
pub fn stem(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string()
}
