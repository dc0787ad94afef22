use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use icd_core::{reconstruct_constrained, Baseline, ChromaticityMap, DecoupledImage, Epsilon, IntensityMap};
use serde::Serialize;

use super::decompose::{Sidecar, CHROMA_SUFFIX, INTENSITY_SUFFIX, SIDECAR_SUFFIX};
use super::{all_ok, display, guard_overwrite, par_map, prepare_out_dir, require_inputs, FileResult};
use crate::config::{resolve_baseline, usage, FileConfig, ReconstructArgs};
use crate::io::{save_png, FloatMap};
use crate::{report, CliError, Outcome};

#[derive(Debug, Serialize)]
struct Rebuilt {
    output: String,
    eps: f64,
    baseline: Baseline,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    results: Vec<FileResult<Rebuilt>>,
}

/// Directory and stem shared by the three decomposition files.
fn split_name(p: &Path) -> Option<(PathBuf, String)> {
    let name = p.file_name()?.to_str()?;
    let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
    [INTENSITY_SUFFIX, CHROMA_SUFFIX, SIDECAR_SUFFIX]
        .iter()
        .find_map(|s| name.strip_suffix(s))
        .filter(|s| !s.is_empty())
        .map(|s| (dir, s.to_string()))
}

fn expand(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("cannot list {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.to_str().is_some_and(|s| s.ends_with(INTENSITY_SUFFIX)))
                .collect();
            found.sort();
            if found.is_empty() {
                bail!("no *{INTENSITY_SUFFIX} files in {}", p.display());
            }
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn check_map(m: &FloatMap, channels: usize, side: &Sidecar, path: &Path) -> Result<()> {
    if m.channels != channels || m.width != side.width || m.height != side.height {
        bail!(
            "{}: expected {}x{} with {} channel(s), found {}x{} with {}",
            path.display(),
            side.width,
            side.height,
            channels,
            m.width,
            m.height,
            m.channels
        );
    }
    Ok(())
}

fn reconstruct_one(
    input: &Path,
    out_dir: &Path,
    eps_override: Option<f64>,
    baseline_override: Option<Baseline>,
    all_inputs: &[PathBuf],
) -> Result<Rebuilt> {
    let Some((dir, name)) = split_name(input) else {
        bail!(
            "{} is not a *{INTENSITY_SUFFIX}, *{CHROMA_SUFFIX} or *{SIDECAR_SUFFIX} file",
            input.display()
        );
    };
    let side_path = dir.join(format!("{name}{SIDECAR_SUFFIX}"));
    if !side_path.is_file() {
        bail!("missing sidecar: expected {}", side_path.display());
    }
    let text = fs::read_to_string(&side_path).with_context(|| format!("cannot read {}", side_path.display()))?;
    let side: Sidecar =
        serde_json::from_str(&text).with_context(|| format!("invalid sidecar {}", side_path.display()))?;

    let mut warnings = Vec::new();
    let eps = match eps_override {
        Some(e) if e != side.eps => {
            warnings.push(format!("eps {e} overrides sidecar value {}", side.eps));
            e
        }
        _ => side.eps,
    };
    let eps = Epsilon::new(eps)?;
    let baseline = match baseline_override {
        Some(b) if b != side.baseline => {
            warnings.push(format!("baseline {b} overrides sidecar value {}", side.baseline));
            b
        }
        _ => side.baseline,
    };

    let i_path = dir.join(&side.intensity);
    let c_path = dir.join(&side.chroma);
    let imap = FloatMap::read(&i_path)?;
    check_map(&imap, 1, &side, &i_path)?;
    let cmap = FloatMap::read(&c_path)?;
    check_map(&cmap, 3, &side, &c_path)?;

    let (w, h) = (side.width, side.height);
    let intensity = IntensityMap::new(w, h, imap.data.iter().map(|&v| v as f64).collect())?;
    let chroma = ChromaticityMap::new(
        w,
        h,
        cmap.data
            .chunks_exact(3)
            .map(|c| [c[0] as f64, c[1] as f64, c[2] as f64])
            .collect(),
    )?;
    let dec = DecoupledImage::new(intensity, chroma, baseline)?;
    let img = reconstruct_constrained(&dec, eps)?;

    let target = out_dir.join(format!("{name}.png"));
    guard_overwrite(&target, all_inputs)?;
    guard_overwrite(&target, &[PathBuf::from(&side.source)])?;
    save_png(&img, &target)?;
    Ok(Rebuilt {
        output: display(&target),
        eps: eps.get(),
        baseline,
        warnings,
    })
}

pub fn run(args: &ReconstructArgs, cfg: &FileConfig) -> Outcome {
    require_inputs(&args.io.inputs)?;
    let out_dir = args
        .io
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| CliError::Usage("reconstruct needs --out".into()))?;
    let eps_override = args.io.eps.or(cfg.eps);
    if let Some(e) = eps_override {
        Epsilon::new(e).map_err(usage)?;
    }
    let baseline_override = resolve_baseline(args.baseline.as_deref(), cfg)?;
    prepare_out_dir(&out_dir)?;
    let files = expand(&args.io.inputs)?;

    let results = par_map(&files, |p| {
        FileResult::from_result(p, reconstruct_one(p, &out_dir, eps_override, baseline_override, &files))
    });
    let ok = all_ok(&results);
    report::emit(
        &Report {
            command: "reconstruct",
            results,
        },
        args.io.report.as_deref().or(cfg.report.as_deref()),
    )?;
    Ok(ok)
}
