//! Exhaustive grid search for the scalar parameter of an intensity mapping.

use std::str::FromStr;

use serde::Serialize;

use crate::error::{IcdError, Result};
use crate::image::{Epsilon, RgbImage};
use crate::mappings::{enhance, MappingSpec, MappingVariant};
use crate::metrics::{smooth_l1, total_loss, LossWeights};
use crate::transform::{decompose, Baseline};

const MAX_GRID_POINTS: usize = 1_000_000;

/// Ascending list of candidate parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid(Vec<f64>);

impl ParamGrid {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(IcdError::Config("parameter grid is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(IcdError::Config(format!("non-finite grid value {v}")));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(ParamGrid(values))
    }

    /// `start, start + step, ...` up to and including `stop`.
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !start.is_finite() || !stop.is_finite() {
            return Err(IcdError::Config(format!("invalid grid {start}:{stop}:{step}")));
        }
        if stop < start {
            return Err(IcdError::Config(format!("grid stop {stop} is below start {start}")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if n > MAX_GRID_POINTS {
            return Err(IcdError::Config(format!("grid has {n} points, limit is {MAX_GRID_POINTS}")));
        }
        ParamGrid::new((0..n).map(|i| start + i as f64 * step).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Largest gap between neighbouring values.
    pub fn max_step(&self) -> f64 {
        self.0.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

impl FromStr for ParamGrid {
    type Err = IcdError;

    /// Parses `start:stop:step`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, stop, step] = parts[..] else {
            return Err(IcdError::Config(format!("grid {s:?} is not start:stop:step")));
        };
        let num = |p: &str| {
            p.parse::<f64>()
                .map_err(|_| IcdError::Config(format!("grid component {p:?} is not a number")))
        };
        ParamGrid::range(num(start)?, num(stop)?, num(step)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum FitObjective {
    /// Joint loss with the given weights.
    TotalLoss(LossWeights),
    /// Smooth-L1 between the intensity envelopes of output and reference.
    IntensitySmoothL1 { beta: f64 },
    #[default]
    DefaultTotalLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub param: f64,
    pub loss: f64,
}

/// The mapping for `variant` with its scalar parameter set to `param`.
pub fn scalar_mapping(variant: MappingVariant, param: f64) -> Result<MappingSpec> {
    match variant {
        MappingVariant::IntensityDivision => MappingSpec::division(param),
        MappingVariant::IntensityFractional => MappingSpec::fractional(param),
        MappingVariant::IntensityQuadratic => MappingSpec::quadratic(param),
        other => Err(IcdError::Config(format!(
            "variant {other} has no scalar parameter to fit; use intensity-division, \
             intensity-fractional or intensity-quadratic"
        ))),
    }
}

/// Loss of `enhance(dark, variant(param))` against `reference`, with zero chroma residual.
pub fn evaluate_param(
    dark: &RgbImage,
    reference: &RgbImage,
    variant: MappingVariant,
    param: f64,
    eps: Epsilon,
    objective: FitObjective,
) -> Result<f64> {
    let spec = scalar_mapping(variant, param)?;
    let out = enhance(dark, &spec, None, eps)?;
    match objective {
        FitObjective::DefaultTotalLoss => Ok(total_loss(&out, reference, eps, &LossWeights::default())?.l_total),
        FitObjective::TotalLoss(w) => Ok(total_loss(&out, reference, eps, &w)?.l_total),
        FitObjective::IntensitySmoothL1 { beta } => {
            let a = decompose(&out, eps, Baseline::Max)?;
            let b = decompose(reference, eps, Baseline::Max)?;
            Ok(smooth_l1(a.intensity().values(), b.intensity().values(), beta))
        }
    }
}

/// Evaluates every grid value and returns the minimizer.
///
/// Ties go to the smaller parameter value.
pub fn fit_scalar_param(
    dark: &RgbImage,
    reference: &RgbImage,
    variant: MappingVariant,
    grid: &ParamGrid,
    eps: Epsilon,
    objective: FitObjective,
) -> Result<FitResult> {
    if dark.dims() != reference.dims() {
        return Err(IcdError::dims(dark.dims(), reference.dims()));
    }
    scalar_mapping(variant, 1.0)?;
    let mut best: Option<FitResult> = None;
    for &param in grid.values() {
        let loss = evaluate_param(dark, reference, variant, param, eps, objective)?;
        if best.is_none_or(|b| loss < b.loss) {
            best = Some(FitResult { param, loss });
        }
    }
    best.ok_or_else(|| IcdError::Config("parameter grid is empty".into()))
}
