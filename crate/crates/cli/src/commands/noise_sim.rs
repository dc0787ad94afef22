use std::path::PathBuf;

use icd_core::{monte_carlo_chroma_agreement, AgreementReport, NoiseModel, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{all_ok, par_map, FileResult};
use crate::config::{parse_size, resolve_eps, usage, FileConfig, NoiseArgs};
use crate::io::{expand_inputs, load_rgb, IMAGE_EXTENSIONS};
use crate::{report, CliError, Outcome};

pub const DEFAULT_SIGMA: f64 = 0.01;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SIZE: (usize, usize) = (16, 16);

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    eps: f64,
    results: Vec<FileResult<AgreementReport>>,
}

/// Clean image with channels uniform in [0.2, 1], drawn from a stream
/// separate from the noise trials.
pub fn synthetic_clean(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    RgbImage::from_fn(width, height, |_, _| {
        [0; 3].map(|_| rng.random_range(0.2..=1.0))
    })
    .expect("synthetic values lie in [0, 1]")
}

pub fn run(args: &NoiseArgs, cfg: &FileConfig) -> Outcome {
    let eps = resolve_eps(args.io.eps, cfg)?;
    let sigma = args.sigma.or(cfg.sigma).unwrap_or(DEFAULT_SIGMA);
    let trials = args.trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS);
    let seed = args.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    if trials == 0 {
        return Err(CliError::Usage("--trials must be >= 1".into()));
    }
    let model = NoiseModel::gaussian(sigma).map_err(usage)?;

    let results = if args.io.inputs.is_empty() {
        let (w, h) = match &args.synthetic {
            Some(s) => parse_size(s)?,
            None => DEFAULT_SIZE,
        };
        let clean = synthetic_clean(w, h, seed);
        let name = PathBuf::from(format!("synthetic:{w}x{h}"));
        vec![FileResult::from_result(
            &name,
            monte_carlo_chroma_agreement(&clean, &model, trials, eps, seed).map_err(Into::into),
        )]
    } else {
        if args.synthetic.is_some() {
            return Err(CliError::Usage("--synthetic cannot be combined with input files".into()));
        }
        let files = expand_inputs(&args.io.inputs, IMAGE_EXTENSIONS)?;
        par_map(&files, |p| {
            let r = load_rgb(p)
                .and_then(|img| Ok(monte_carlo_chroma_agreement(&img, &model, trials, eps, seed)?));
            FileResult::from_result(p, r)
        })
    };
    let ok = all_ok(&results);
    report::emit(
        &Report {
            command: "noise-sim",
            eps: eps.get(),
            results,
        },
        args.io.report.as_deref().or(cfg.report.as_deref()),
    )?;
    Ok(ok)
}
