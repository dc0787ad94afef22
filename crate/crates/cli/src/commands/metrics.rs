use std::path::{Path, PathBuf};

use anyhow::Result;
use icd_core::{Epsilon, LossWeights, MetricsReport};
use serde::Serialize;

use super::{display, par_map};
use crate::config::{resolve_eps, usage, FileConfig, MetricsArgs};
use crate::io::{expand_inputs, load_rgb, IMAGE_EXTENSIONS};
use crate::{report, CliError, Outcome};

#[derive(Debug, Serialize)]
struct PairResult {
    output: String,
    reference: String,
    status: &'static str,
    #[serde(flatten)]
    metrics: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    eps: f64,
    weights: LossWeights,
    results: Vec<PairResult>,
}

fn parse_pair(s: &str) -> Result<(PathBuf, PathBuf), CliError> {
    match s.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.into(), b.into())),
        _ => Err(CliError::Usage(format!("--pair expects output,reference, got {s:?}"))),
    }
}

fn measure(out: &Path, reference: &Path, eps: Epsilon, w: &LossWeights) -> Result<MetricsReport> {
    let a = load_rgb(out)?;
    let b = load_rgb(reference)?;
    Ok(MetricsReport::compute(&a, &b, eps, w)?)
}

pub fn run(args: &MetricsArgs, cfg: &FileConfig) -> Outcome {
    let eps = resolve_eps(args.io.eps, cfg)?;
    let defaults = LossWeights::default();
    let weights = LossWeights::new(
        args.lambda_i.or(cfg.lambda_i).unwrap_or(defaults.lambda_i),
        args.lambda_c.or(cfg.lambda_c).unwrap_or(defaults.lambda_c),
        defaults.smooth_l1_beta,
    )
    .map_err(usage)?;

    let mut pairs = args.pairs.iter().map(|s| parse_pair(s)).collect::<Result<Vec<_>, _>>()?;
    if !args.io.inputs.is_empty() {
        if args.references.is_empty() {
            return Err(CliError::Usage("input files need --reference".into()));
        }
        let outs = expand_inputs(&args.io.inputs, IMAGE_EXTENSIONS)?;
        let refs = expand_inputs(&args.references, IMAGE_EXTENSIONS)?;
        if outs.len() != refs.len() {
            return Err(CliError::Usage(format!(
                "{} outputs but {} references",
                outs.len(),
                refs.len()
            )));
        }
        pairs.extend(outs.into_iter().zip(refs));
    }
    if pairs.is_empty() {
        return Err(CliError::Usage("no image pairs given".into()));
    }

    let results = par_map(&pairs, |(o, r)| {
        let (metrics, error) = match measure(o, r, eps, &weights) {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(format!("{e:#}"))),
        };
        PairResult {
            output: display(o),
            reference: display(r),
            status: if error.is_none() { "ok" } else { "error" },
            metrics,
            error,
        }
    });
    let ok = results.iter().all(|r| r.error.is_none());
    report::emit(
        &Report {
            command: "metrics",
            eps: eps.get(),
            weights,
            results,
        },
        args.io.report.as_deref().or(cfg.report.as_deref()),
    )?;
    Ok(ok)
}
