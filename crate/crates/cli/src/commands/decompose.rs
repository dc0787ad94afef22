use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use icd_core::{decompose, Baseline, Epsilon};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{all_ok, display, par_map, require_inputs, FileResult};
use crate::config::{resolve_baseline, resolve_eps, DecomposeArgs, FileConfig};
use crate::io::{expand_inputs, load_rgb, stem, FloatMap, IMAGE_EXTENSIONS};
use crate::{report, Outcome};

pub const INTENSITY_SUFFIX: &str = ".intensity.pfm";
pub const CHROMA_SUFFIX: &str = ".chroma.pfm";
pub const SIDECAR_SUFFIX: &str = ".icd.json";

/// Written next to every decomposition. Floats keep full precision here since
/// reconstruction reads `eps` back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub eps: f64,
    pub baseline: Baseline,
    pub width: usize,
    pub height: usize,
    pub source: String,
    pub source_sha256: String,
    pub intensity: String,
    pub chroma: String,
}

#[derive(Debug, Serialize)]
struct Written {
    intensity: String,
    chroma: String,
    sidecar: String,
    width: usize,
    height: usize,
}

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    eps: f64,
    baseline: Baseline,
    results: Vec<FileResult<Written>>,
}

fn decompose_one(path: &Path, out: Option<&Path>, eps: Epsilon, baseline: Baseline) -> Result<Written> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let img = load_rgb(path)?;
    let dec = decompose(&img, eps, baseline)?;
    let (w, h) = dec.dims();

    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let name = stem(path);
    let i_name = format!("{name}{INTENSITY_SUFFIX}");
    let c_name = format!("{name}{CHROMA_SUFFIX}");
    let s_path = dir.join(format!("{name}{SIDECAR_SUFFIX}"));

    let intensity = dec.intensity().values().iter().map(|&v| v as f32).collect();
    FloatMap::gray(w, h, intensity).write(&dir.join(&i_name))?;
    let chroma = dec.chroma().values().iter().flatten().map(|&v| v as f32).collect();
    FloatMap::color(w, h, chroma).write(&dir.join(&c_name))?;

    let sidecar = Sidecar {
        eps: eps.get(),
        baseline,
        width: w,
        height: h,
        source: display(path),
        source_sha256: hex::encode(Sha256::digest(&bytes)),
        intensity: i_name.clone(),
        chroma: c_name.clone(),
    };
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    fs::write(&s_path, text).with_context(|| format!("cannot write {}", s_path.display()))?;

    Ok(Written {
        intensity: display(&dir.join(i_name)),
        chroma: display(&dir.join(c_name)),
        sidecar: display(&s_path),
        width: w,
        height: h,
    })
}

pub fn run(args: &DecomposeArgs, cfg: &FileConfig) -> Outcome {
    require_inputs(&args.io.inputs)?;
    let eps = resolve_eps(args.io.eps, cfg)?;
    let baseline = resolve_baseline(args.baseline.as_deref(), cfg)?.unwrap_or(Baseline::Max);
    let out: Option<PathBuf> = args.io.out.clone().or_else(|| cfg.out.clone());
    if let Some(d) = &out {
        super::prepare_out_dir(d)?;
    }
    let files = expand_inputs(&args.io.inputs, IMAGE_EXTENSIONS)?;

    let results = par_map(&files, |p| {
        FileResult::from_result(p, decompose_one(p, out.as_deref(), eps, baseline))
    });
    let ok = all_ok(&results);
    let rep = Report {
        command: "decompose",
        eps: eps.get(),
        baseline,
        results,
    };
    report::emit(&rep, args.io.report.as_deref().or(cfg.report.as_deref()))?;
    Ok(ok)
}
