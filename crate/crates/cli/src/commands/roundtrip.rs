use std::path::Path;

use anyhow::{bail, Result};
use icd_core::{decompose, reconstruct_unclipped, Baseline, Epsilon};
use serde::Serialize;

use super::{all_ok, par_map, require_inputs, FileResult};
use crate::config::{resolve_baseline, resolve_eps, FileConfig, RoundtripArgs};
use crate::io::{expand_inputs, load_rgb, IMAGE_EXTENSIONS};
use crate::{report, CliError, Outcome};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Serialize)]
struct Check {
    width: usize,
    height: usize,
    max_abs_error: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    eps: f64,
    baseline: Baseline,
    tolerance: f64,
    results: Vec<FileResult<Check>>,
}

fn check_one(path: &Path, eps: Epsilon, baseline: Baseline, tol: f64) -> Result<Check> {
    let img = load_rgb(path)?;
    let dec = decompose(&img, eps, baseline)?;
    let back = reconstruct_unclipped(&dec, eps);
    let max_abs_error = img
        .pixels()
        .iter()
        .zip(&back)
        .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs()))
        .fold(0.0, f64::max);
    if max_abs_error > tol {
        bail!("round-trip error {max_abs_error:e} exceeds {tol:e}");
    }
    Ok(Check {
        width: img.width(),
        height: img.height(),
        max_abs_error,
    })
}

pub fn run(args: &RoundtripArgs, cfg: &FileConfig) -> Outcome {
    require_inputs(&args.io.inputs)?;
    let eps = resolve_eps(args.io.eps, cfg)?;
    let baseline = resolve_baseline(args.baseline.as_deref(), cfg)?.unwrap_or(Baseline::Max);
    let tol = args.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if tol.is_nan() || tol < 0.0 {
        return Err(CliError::Usage(format!("tolerance must be >= 0, got {tol}")));
    }
    let files = expand_inputs(&args.io.inputs, IMAGE_EXTENSIONS)?;
    let results = par_map(&files, |p| FileResult::from_result(p, check_one(p, eps, baseline, tol)));
    let ok = all_ok(&results);
    report::emit(
        &Report {
            command: "roundtrip-check",
            eps: eps.get(),
            baseline,
            tolerance: tol,
            results,
        },
        args.io.report.as_deref().or(cfg.report.as_deref()),
    )?;
    Ok(ok)
}
