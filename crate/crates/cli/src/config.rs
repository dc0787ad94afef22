//! Command-line flags and the optional TOML config file.
//!
//! Flags take precedence over the config file; the config file over built-in
//! defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use icd_core::{Baseline, ChannelParam, Epsilon, GateParams, MappingVariant, ParamGrid};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "icd", version, about = "Intensity/chromaticity decoupling toolkit")]
pub struct Cli {
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split images into intensity (PFM), chromaticity (PFM) and a JSON sidecar.
    Decompose(DecomposeArgs),
    /// Rebuild PNGs from decomposition files.
    Reconstruct(ReconstructArgs),
    /// Apply a decoupled mapping, optionally fitting its parameter to references.
    Enhance(Box<EnhanceArgs>),
    /// Monte-Carlo check of the first-order chromaticity noise model.
    NoiseSim(NoiseArgs),
    /// Full-reference metrics and losses for image pairs.
    Metrics(MetricsArgs),
    /// Decompose and reconstruct in memory, reporting the largest error.
    RoundtripCheck(RoundtripArgs),
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input files or directories.
    pub inputs: Vec<PathBuf>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// JSON report path (stdout when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,

    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub io: IoArgs,

    #[arg(long, value_parser = ["max", "min", "ave"])]
    pub baseline: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    /// `*.intensity.pfm`, `*.chroma.pfm` or `*.icd.json` files, or directories.
    #[command(flatten)]
    pub io: IoArgs,

    /// Overrides the sidecar baseline.
    #[arg(long, value_parser = ["max", "min", "ave"])]
    pub baseline: Option<String>,
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    #[command(flatten)]
    pub io: IoArgs,

    /// Mapping variant, e.g. residual or intensity-division.
    #[arg(long)]
    pub variant: Option<String>,

    #[arg(long)]
    pub gate_alpha: Option<f64>,
    #[arg(long)]
    pub gate_gamma: Option<f64>,

    /// Uniform intensity residual.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_i: Option<f64>,
    /// Single-channel PFM with a per-pixel intensity residual.
    #[arg(long)]
    pub delta_i_map: Option<PathBuf>,
    /// Chromaticity residual: one value or `r,g,b`.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_c: Option<String>,
    /// Three-channel PFM with a per-pixel chromaticity residual.
    #[arg(long)]
    pub delta_c_map: Option<PathBuf>,
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long)]
    pub gamma_c: Option<String>,
    /// Uniform gate weight for the gated residual: one value or `r,g,b`.
    #[arg(long)]
    pub w: Option<String>,
    /// Three-channel PFM with per-pixel gate weights.
    #[arg(long)]
    pub w_map: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha_c: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta_c: Option<String>,

    /// Fit the scalar parameter of the variant against the references.
    #[arg(long)]
    pub fit: bool,
    /// Fit grid as `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Reference images: files paired by order, or a directory matched by name.
    #[arg(long = "reference")]
    pub references: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Clean images; a synthetic image is used when none are given.
    #[command(flatten)]
    pub io: IoArgs,

    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synthetic clean image size `WxH`, channels uniform in [0.2, 1].
    #[arg(long)]
    pub synthetic: Option<String>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Output images, paired with --reference.
    #[command(flatten)]
    pub io: IoArgs,

    /// `output,reference` pair; may be repeated.
    #[arg(long = "pair")]
    pub pairs: Vec<String>,
    #[arg(long = "reference")]
    pub references: Vec<PathBuf>,
    #[arg(long)]
    pub lambda_i: Option<f64>,
    #[arg(long)]
    pub lambda_c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    #[command(flatten)]
    pub io: IoArgs,

    #[arg(long, value_parser = ["max", "min", "ave"])]
    pub baseline: Option<String>,

    #[arg(long)]
    pub tolerance: Option<f64>,
}

/// Values readable from `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub eps: Option<f64>,
    pub baseline: Option<String>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub gate_alpha: Option<f64>,
    pub gate_gamma: Option<f64>,
    pub variant: Option<String>,
    pub grid: Option<String>,
    pub sigma: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub lambda_i: Option<f64>,
    pub lambda_c: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

pub fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn resolve_eps(flag: Option<f64>, cfg: &FileConfig) -> Result<Epsilon, CliError> {
    Epsilon::new(flag.or(cfg.eps).unwrap_or(Epsilon::DEFAULT)).map_err(usage)
}

pub fn resolve_baseline(flag: Option<&str>, cfg: &FileConfig) -> Result<Option<Baseline>, CliError> {
    flag.or(cfg.baseline.as_deref())
        .map(|s| s.parse::<Baseline>().map_err(usage))
        .transpose()
}

pub fn resolve_gate(alpha: Option<f64>, gamma: Option<f64>, cfg: &FileConfig) -> Result<Option<GateParams>, CliError> {
    let alpha = alpha.or(cfg.gate_alpha);
    let gamma = gamma.or(cfg.gate_gamma);
    if alpha.is_none() && gamma.is_none() {
        return Ok(None);
    }
    GateParams::new(
        alpha.unwrap_or(GateParams::DEFAULT_ALPHA),
        gamma.unwrap_or(GateParams::DEFAULT_GAMMA),
    )
    .map(Some)
    .map_err(usage)
}

pub fn resolve_variant(flag: Option<&str>, cfg: &FileConfig) -> Result<MappingVariant, CliError> {
    match flag.or(cfg.variant.as_deref()) {
        Some(v) => v.parse().map_err(usage),
        None => Ok(MappingVariant::Residual),
    }
}

pub fn resolve_grid(flag: Option<&str>, cfg: &FileConfig, variant: MappingVariant) -> Result<ParamGrid, CliError> {
    let default = match variant {
        MappingVariant::IntensityDivision => "0.05:2:0.05",
        MappingVariant::IntensityFractional => "0.5:20:0.5",
        _ => "-1:1:0.05",
    };
    flag.or(cfg.grid.as_deref()).unwrap_or(default).parse().map_err(usage)
}

/// `0.5` or `0.1,0.2,0.3`.
pub fn parse_channel(s: &str) -> Result<ChannelParam, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| {
        p.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("{p:?} is not a number")))
    };
    match parts[..] {
        [v] => Ok(ChannelParam::Uniform(num(v)?)),
        [r, g, b] => Ok(ChannelParam::PerChannel([num(r)?, num(g)?, num(b)?])),
        _ => Err(CliError::Usage(format!("expected one value or r,g,b, got {s:?}"))),
    }
}

/// `WxH`.
pub fn parse_size(s: &str) -> Result<(usize, usize), CliError> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| CliError::Usage(format!("size {s:?} is not WxH")))?;
    let w: usize = w.trim().parse().map_err(|_| CliError::Usage(format!("bad width in {s:?}")))?;
    let h: usize = h.trim().parse().map_err(|_| CliError::Usage(format!("bad height in {s:?}")))?;
    if w == 0 || h == 0 {
        return Err(CliError::Usage(format!("size {s:?} must be positive")));
    }
    Ok((w, h))
}
