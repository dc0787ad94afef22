use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use icd_core::fit::scalar_mapping;
use icd_core::{
    enhance, fit_scalar_param, ChannelParam, Epsilon, FitObjective, GateParams, LossWeights, MappingParams,
    MappingSpec, MappingVariant, MetricsReport, ParamGrid, RgbImage, ScalarParam,
};
use serde::Serialize;

use super::{all_ok, display, guard_overwrite, par_map, prepare_out_dir, require_inputs, FileResult};
use crate::config::{
    parse_channel, resolve_eps, resolve_gate, resolve_grid, resolve_variant, usage, EnhanceArgs, FileConfig,
};
use crate::io::{expand_inputs, load_rgb, save_png, stem, FloatMap, IMAGE_EXTENSIONS};
use crate::{report, CliError, Outcome};

#[derive(Debug, Serialize)]
struct Enhanced {
    output: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fitted_param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<MetricsReport>,
}

#[derive(Debug, Serialize)]
struct Report {
    command: &'static str,
    variant: MappingVariant,
    eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gate: Option<GateParams>,
    results: Vec<FileResult<Enhanced>>,
}

/// A per-pixel parameter map loaded once and checked against every image.
struct MapFile {
    path: PathBuf,
    map: FloatMap,
}

impl MapFile {
    fn load(path: &Path, channels: usize) -> Result<Self, CliError> {
        let map = FloatMap::read(path)?;
        if map.channels != channels {
            return Err(CliError::Usage(format!(
                "{} has {} channel(s), expected {channels}",
                path.display(),
                map.channels
            )));
        }
        Ok(MapFile {
            path: path.to_path_buf(),
            map,
        })
    }

    fn check(&self, img: &RgbImage) -> Result<()> {
        if (self.map.width, self.map.height) != img.dims() {
            bail!(
                "{} is {}x{} but the image is {}x{}",
                self.path.display(),
                self.map.width,
                self.map.height,
                img.width(),
                img.height()
            );
        }
        Ok(())
    }

    fn scalar(&self) -> ScalarParam {
        ScalarParam::Field(self.map.data.iter().map(|&v| v as f64).collect())
    }

    fn channel(&self) -> ChannelParam {
        ChannelParam::Field(
            self.map
                .data
                .chunks_exact(3)
                .map(|c| [c[0] as f64, c[1] as f64, c[2] as f64])
                .collect(),
        )
    }
}

struct Maps {
    delta_i: Option<MapFile>,
    delta_c: Option<MapFile>,
    w: Option<MapFile>,
}

impl Maps {
    fn apply(&self, base: &MappingParams, img: &RgbImage) -> Result<MappingParams> {
        let mut p = base.clone();
        if let Some(m) = &self.delta_i {
            m.check(img)?;
            p.delta_i = Some(m.scalar());
        }
        if let Some(m) = &self.delta_c {
            m.check(img)?;
            p.delta_c = Some(m.channel());
        }
        if let Some(m) = &self.w {
            m.check(img)?;
            p.w = Some(m.channel());
        }
        Ok(p)
    }

    fn any(&self) -> bool {
        self.delta_i.is_some() || self.delta_c.is_some() || self.w.is_some()
    }
}

fn channel_opt(s: &Option<String>) -> Result<Option<ChannelParam>, CliError> {
    s.as_deref().map(parse_channel).transpose()
}

fn base_params(args: &EnhanceArgs) -> Result<MappingParams, CliError> {
    Ok(MappingParams {
        delta_i: args.delta_i.map(ScalarParam::Uniform),
        delta_c: channel_opt(&args.delta_c)?,
        l: args.l.map(ScalarParam::Uniform),
        u: args.u.map(ScalarParam::Uniform),
        a: args.a.map(ScalarParam::Uniform),
        gamma_c: channel_opt(&args.gamma_c)?,
        w: channel_opt(&args.w)?,
        alpha_c: channel_opt(&args.alpha_c)?,
        beta_c: channel_opt(&args.beta_c)?,
    })
}

/// Pairs each input with a reference: a single directory is matched by file
/// name (or stem), otherwise files are paired in order.
fn pair_references(inputs: &[PathBuf], refs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    if let [dir] = refs {
        if dir.is_dir() {
            return inputs
                .iter()
                .map(|i| {
                    let same = i.file_name().map(|n| dir.join(n));
                    if let Some(p) = same.filter(|p| p.is_file()) {
                        return Ok(p);
                    }
                    let s = stem(i);
                    IMAGE_EXTENSIONS
                        .iter()
                        .map(|e| dir.join(format!("{s}.{e}")))
                        .find(|p| p.is_file())
                        .ok_or_else(|| {
                            CliError::Usage(format!("no reference for {} in {}", i.display(), dir.display()))
                        })
                })
                .collect();
        }
    }
    let refs = expand_inputs(refs, IMAGE_EXTENSIONS)?;
    if refs.len() != inputs.len() {
        return Err(CliError::Usage(format!(
            "{} inputs but {} references",
            inputs.len(),
            refs.len()
        )));
    }
    Ok(refs)
}

struct Job<'a> {
    variant: MappingVariant,
    params: &'a MappingParams,
    maps: &'a Maps,
    gate: Option<&'a GateParams>,
    eps: Epsilon,
    fit_grid: Option<&'a ParamGrid>,
    out_dir: &'a Path,
    inputs: &'a [PathBuf],
}

impl Job<'_> {
    fn run_one(&self, input: &Path, reference: Option<&Path>) -> Result<Enhanced> {
        let img = load_rgb(input)?;
        let ref_img = reference.map(load_rgb).transpose()?;

        let (spec, fitted) = match (self.fit_grid, &ref_img) {
            (Some(grid), Some(r)) => {
                let fit = fit_scalar_param(&img, r, self.variant, grid, self.eps, FitObjective::DefaultTotalLoss)?;
                (scalar_mapping(self.variant, fit.param)?, Some(fit))
            }
            _ => (MappingSpec::new(self.variant, self.maps.apply(self.params, &img)?)?, None),
        };
        let out = enhance(&img, &spec, self.gate, self.eps)?;
        let metrics = ref_img
            .as_ref()
            .map(|r| MetricsReport::compute(&out, r, self.eps, &LossWeights::default()))
            .transpose()?;

        let target = self.out_dir.join(format!("{}.png", stem(input)));
        guard_overwrite(&target, self.inputs)?;
        save_png(&out, &target)?;
        Ok(Enhanced {
            output: display(&target),
            reference: reference.map(display),
            fitted_param: fitted.map(|f| f.param),
            fit_loss: fitted.map(|f| f.loss),
            metrics,
        })
    }
}

pub fn run(args: &EnhanceArgs, cfg: &FileConfig) -> Outcome {
    require_inputs(&args.io.inputs)?;
    let variant = resolve_variant(args.variant.as_deref(), cfg)?;
    let eps = resolve_eps(args.io.eps, cfg)?;
    let gate = resolve_gate(args.gate_alpha, args.gate_gamma, cfg)?;
    let out_dir = args
        .io
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| CliError::Usage("enhance needs --out".into()))?;

    let params = base_params(args)?;
    let maps = Maps {
        delta_i: args.delta_i_map.as_deref().map(|p| MapFile::load(p, 1)).transpose()?,
        delta_c: args.delta_c_map.as_deref().map(|p| MapFile::load(p, 3)).transpose()?,
        w: args.w_map.as_deref().map(|p| MapFile::load(p, 3)).transpose()?,
    };

    let grid = if args.fit {
        if args.references.is_empty() {
            return Err(CliError::Usage("--fit needs --reference".into()));
        }
        if gate.is_some() || maps.any() {
            return Err(CliError::Usage("--fit cannot be combined with gate or parameter maps".into()));
        }
        scalar_mapping(variant, 1.0).map_err(usage)?;
        Some(resolve_grid(args.grid.as_deref(), cfg, variant)?)
    } else {
        // validate scalar parameters up front so bad flags are usage errors
        if !maps.any() {
            MappingSpec::new(variant, params.clone()).map_err(usage)?;
        }
        None
    };

    let files = expand_inputs(&args.io.inputs, IMAGE_EXTENSIONS)?;
    let refs = if args.references.is_empty() {
        None
    } else {
        Some(pair_references(&files, &args.references)?)
    };
    prepare_out_dir(&out_dir)?;

    let job = Job {
        variant,
        params: &params,
        maps: &maps,
        gate: gate.as_ref(),
        eps,
        fit_grid: grid.as_ref(),
        out_dir: &out_dir,
        inputs: &files,
    };
    let indices: Vec<usize> = (0..files.len()).collect();
    let results = par_map(&indices, |&i| {
        let r = refs.as_ref().map(|r| r[i].as_path());
        FileResult::from_result(&files[i], job.run_one(&files[i], r))
    });
    let ok = all_ok(&results);
    report::emit(
        &Report {
            command: "enhance",
            variant,
            eps: eps.get(),
            gate,
            results,
        },
        args.io.report.as_deref().or(cfg.report.as_deref()),
    )?;
    Ok(ok)
}
