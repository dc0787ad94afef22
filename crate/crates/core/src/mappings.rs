//! The eight decoupled update rules and the enhancement pipeline built on them.
//!
//! | variant               | intensity out                 | chroma out        |
//! |-----------------------|-------------------------------|-------------------|
//! | Residual              | `I + dI`                      | `C + dC`          |
//! | EndToEnd              | `dI`                          | `dC`              |
//! | IntensityDivision     | `I / L`                       | `C + dC`          |
//! | IntensityFractional   | `u I / (u I + (1 - I) + eps)` | `C + dC`          |
//! | IntensityQuadratic    | `I + a I (1 - I)`             | `C + dC`          |
//! | ChromaGamma           | `I + dI`                      | `gamma * C`       |
//! | GatedChromaResidual   | `I + dI`                      | `C + w * dC`      |
//! | ChromaAffine          | `I + dI`                      | `alpha * C + beta`|
//!
//! Every output passes through `max(., eps)` / `min(., 0)` before inversion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IcdError, Result};
use crate::gate::{chroma_gate, GateParams};
use crate::image::{ChromaticityMap, Epsilon, IntensityMap, RgbImage};
use crate::transform::{
    constrain_chromaticity, constrain_intensity, decompose, reconstruct, Baseline, DecoupledImage,
};

/// A scalar parameter, either shared by all pixels or given per pixel.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarParam {
    Uniform(f64),
    Field(Vec<f64>),
}

impl ScalarParam {
    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self {
            ScalarParam::Uniform(v) => *v,
            ScalarParam::Field(f) => f[i],
        }
    }

    fn values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            ScalarParam::Uniform(v) => Box::new(std::iter::once(*v)),
            ScalarParam::Field(f) => Box::new(f.iter().copied()),
        }
    }

    fn check_len(&self, pixels: usize, name: &str) -> Result<()> {
        match self {
            ScalarParam::Field(f) if f.len() != pixels => Err(IcdError::Dimension {
                expected: format!("{pixels} values for {name}"),
                actual: format!("{} values", f.len()),
            }),
            _ => Ok(()),
        }
    }
}

impl From<f64> for ScalarParam {
    fn from(v: f64) -> Self {
        ScalarParam::Uniform(v)
    }
}

/// A three-channel parameter: one value, one value per channel, or a per-pixel field.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelParam {
    Uniform(f64),
    PerChannel([f64; 3]),
    Field(Vec<[f64; 3]>),
}

impl ChannelParam {
    #[inline]
    fn at(&self, i: usize) -> [f64; 3] {
        match self {
            ChannelParam::Uniform(v) => [*v; 3],
            ChannelParam::PerChannel(v) => *v,
            ChannelParam::Field(f) => f[i],
        }
    }

    fn values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            ChannelParam::Uniform(v) => Box::new(std::iter::once(*v)),
            ChannelParam::PerChannel(v) => Box::new(v.iter().copied()),
            ChannelParam::Field(f) => Box::new(f.iter().flatten().copied()),
        }
    }

    fn check_len(&self, pixels: usize, name: &str) -> Result<()> {
        match self {
            ChannelParam::Field(f) if f.len() != pixels => Err(IcdError::Dimension {
                expected: format!("{pixels} values for {name}"),
                actual: format!("{} values", f.len()),
            }),
            _ => Ok(()),
        }
    }
}

impl From<f64> for ChannelParam {
    fn from(v: f64) -> Self {
        ChannelParam::Uniform(v)
    }
}

impl From<[f64; 3]> for ChannelParam {
    fn from(v: [f64; 3]) -> Self {
        ChannelParam::PerChannel(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MappingVariant {
    Residual,
    EndToEnd,
    IntensityDivision,
    IntensityFractional,
    IntensityQuadratic,
    ChromaGamma,
    GatedChromaResidual,
    ChromaAffine,
}

impl MappingVariant {
    pub const ALL: [MappingVariant; 8] = [
        MappingVariant::Residual,
        MappingVariant::EndToEnd,
        MappingVariant::IntensityDivision,
        MappingVariant::IntensityFractional,
        MappingVariant::IntensityQuadratic,
        MappingVariant::ChromaGamma,
        MappingVariant::GatedChromaResidual,
        MappingVariant::ChromaAffine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MappingVariant::Residual => "residual",
            MappingVariant::EndToEnd => "end-to-end",
            MappingVariant::IntensityDivision => "intensity-division",
            MappingVariant::IntensityFractional => "intensity-fractional",
            MappingVariant::IntensityQuadratic => "intensity-quadratic",
            MappingVariant::ChromaGamma => "chroma-gamma",
            MappingVariant::GatedChromaResidual => "gated-chroma-residual",
            MappingVariant::ChromaAffine => "chroma-affine",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Self::name).join(", ")
    }
}

impl fmt::Display for MappingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MappingVariant {
    type Err = IcdError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|v| v.name() == norm)
            .ok_or_else(|| {
                IcdError::Config(format!(
                    "unknown variant {s:?}; valid variants: {}",
                    Self::valid_names()
                ))
            })
    }
}

/// Raw parameter bag; which fields are needed depends on the variant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MappingParams {
    pub delta_i: Option<ScalarParam>,
    pub delta_c: Option<ChannelParam>,
    pub l: Option<ScalarParam>,
    pub u: Option<ScalarParam>,
    pub a: Option<ScalarParam>,
    pub gamma_c: Option<ChannelParam>,
    pub w: Option<ChannelParam>,
    pub alpha_c: Option<ChannelParam>,
    pub beta_c: Option<ChannelParam>,
}

/// A validated mapping: a variant plus the parameters it reads.
///
/// Residual terms (`delta_i`, `delta_c`) default to zero where a variant uses
/// them as its secondary rule. The defining parameter of each variant is required.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingSpec {
    variant: MappingVariant,
    params: MappingParams,
}

fn require<'a, T>(p: &'a Option<T>, name: &str, variant: MappingVariant) -> Result<&'a T> {
    p.as_ref()
        .ok_or_else(|| IcdError::Config(format!("variant {variant} requires parameter {name}")))
}

fn positive(values: impl Iterator<Item = f64>, name: &str) -> Result<()> {
    for v in values {
        if !(v > 0.0 && v.is_finite()) {
            return Err(IcdError::Domain(format!("{name} must be > 0, got {v}")));
        }
    }
    Ok(())
}

fn finite(values: impl Iterator<Item = f64>, name: &str) -> Result<()> {
    for v in values {
        if !v.is_finite() {
            return Err(IcdError::Domain(format!("{name} must be finite, got {v}")));
        }
    }
    Ok(())
}

impl MappingSpec {
    pub fn new(variant: MappingVariant, params: MappingParams) -> Result<Self> {
        use MappingVariant::*;
        match variant {
            Residual => {}
            EndToEnd => {
                require(&params.delta_i, "delta_i", variant)?;
                require(&params.delta_c, "delta_c", variant)?;
            }
            IntensityDivision => positive(require(&params.l, "L", variant)?.values(), "L")?,
            IntensityFractional => positive(require(&params.u, "u", variant)?.values(), "u")?,
            IntensityQuadratic => finite(require(&params.a, "a", variant)?.values(), "a")?,
            ChromaGamma => positive(require(&params.gamma_c, "gamma_c", variant)?.values(), "gamma_c")?,
            GatedChromaResidual => {
                for w in require(&params.w, "w", variant)?.values() {
                    if !(0.0..=1.0).contains(&w) {
                        return Err(IcdError::Domain(format!("w must be in [0, 1], got {w}")));
                    }
                }
                require(&params.delta_c, "delta_c", variant)?;
            }
            ChromaAffine => {
                finite(require(&params.alpha_c, "alpha_c", variant)?.values(), "alpha_c")?;
                finite(require(&params.beta_c, "beta_c", variant)?.values(), "beta_c")?;
            }
        }
        if let Some(p) = &params.delta_i {
            finite(p.values(), "delta_i")?;
        }
        if let Some(p) = &params.delta_c {
            finite(p.values(), "delta_c")?;
        }
        Ok(MappingSpec { variant, params })
    }

    pub fn residual(delta_i: impl Into<ScalarParam>, delta_c: impl Into<ChannelParam>) -> Self {
        MappingSpec {
            variant: MappingVariant::Residual,
            params: MappingParams {
                delta_i: Some(delta_i.into()),
                delta_c: Some(delta_c.into()),
                ..Default::default()
            },
        }
    }

    pub fn identity() -> Self {
        Self::residual(0.0, 0.0)
    }

    pub fn end_to_end(intensity: impl Into<ScalarParam>, chroma: impl Into<ChannelParam>) -> Result<Self> {
        Self::new(
            MappingVariant::EndToEnd,
            MappingParams {
                delta_i: Some(intensity.into()),
                delta_c: Some(chroma.into()),
                ..Default::default()
            },
        )
    }

    pub fn division(l: impl Into<ScalarParam>) -> Result<Self> {
        Self::new(
            MappingVariant::IntensityDivision,
            MappingParams {
                l: Some(l.into()),
                ..Default::default()
            },
        )
    }

    pub fn fractional(u: impl Into<ScalarParam>) -> Result<Self> {
        Self::new(
            MappingVariant::IntensityFractional,
            MappingParams {
                u: Some(u.into()),
                ..Default::default()
            },
        )
    }

    pub fn quadratic(a: impl Into<ScalarParam>) -> Result<Self> {
        Self::new(
            MappingVariant::IntensityQuadratic,
            MappingParams {
                a: Some(a.into()),
                ..Default::default()
            },
        )
    }

    pub fn chroma_gamma(gamma: impl Into<ChannelParam>) -> Result<Self> {
        Self::new(
            MappingVariant::ChromaGamma,
            MappingParams {
                gamma_c: Some(gamma.into()),
                ..Default::default()
            },
        )
    }

    pub fn gated_residual(w: impl Into<ChannelParam>, delta_c: impl Into<ChannelParam>) -> Result<Self> {
        Self::new(
            MappingVariant::GatedChromaResidual,
            MappingParams {
                w: Some(w.into()),
                delta_c: Some(delta_c.into()),
                ..Default::default()
            },
        )
    }

    pub fn chroma_affine(alpha: impl Into<ChannelParam>, beta: impl Into<ChannelParam>) -> Result<Self> {
        Self::new(
            MappingVariant::ChromaAffine,
            MappingParams {
                alpha_c: Some(alpha.into()),
                beta_c: Some(beta.into()),
                ..Default::default()
            },
        )
    }

    #[inline]
    pub fn variant(&self) -> MappingVariant {
        self.variant
    }

    #[inline]
    pub fn params(&self) -> &MappingParams {
        &self.params
    }

    fn check_fields(&self, pixels: usize) -> Result<()> {
        let p = &self.params;
        for (param, name) in [(&p.delta_i, "delta_i"), (&p.l, "L"), (&p.u, "u"), (&p.a, "a")] {
            if let Some(param) = param {
                param.check_len(pixels, name)?;
            }
        }
        for (param, name) in [
            (&p.delta_c, "delta_c"),
            (&p.gamma_c, "gamma_c"),
            (&p.w, "w"),
            (&p.alpha_c, "alpha_c"),
            (&p.beta_c, "beta_c"),
        ] {
            if let Some(param) = param {
                param.check_len(pixels, name)?;
            }
        }
        Ok(())
    }
}

const ZERO_SCALAR: ScalarParam = ScalarParam::Uniform(0.0);
const ZERO_CHANNEL: ChannelParam = ChannelParam::Uniform(0.0);

/// Applies the variant's intensity rule, then `max(., eps)`.
pub fn apply_intensity_mapping(spec: &MappingSpec, iin: &IntensityMap, eps: Epsilon) -> Result<IntensityMap> {
    use MappingVariant::*;
    let pixels = iin.values().len();
    spec.check_fields(pixels)?;
    let p = &spec.params;
    let e = eps.get();
    let delta = p.delta_i.as_ref().unwrap_or(&ZERO_SCALAR);

    let data: Vec<f64> = iin
        .values()
        .iter()
        .enumerate()
        .map(|(k, &i)| match spec.variant {
            Residual | ChromaGamma | GatedChromaResidual | ChromaAffine => i + delta.at(k),
            EndToEnd => delta.at(k),
            IntensityDivision => i / p.l.as_ref().map_or(1.0, |l| l.at(k)),
            IntensityFractional => {
                let u = p.u.as_ref().map_or(1.0, |u| u.at(k));
                u * i / (u * i + (1.0 - i) + e)
            }
            IntensityQuadratic => {
                let a = p.a.as_ref().map_or(0.0, |a| a.at(k));
                i + a * i * (1.0 - i)
            }
        })
        .collect();
    let raw = IntensityMap::new(iin.width(), iin.height(), data)?;
    Ok(constrain_intensity(&raw, eps))
}

/// Applies the variant's chromaticity rule, then `min(., 0)`.
pub fn apply_chroma_mapping(spec: &MappingSpec, cin: &ChromaticityMap) -> Result<ChromaticityMap> {
    use MappingVariant::*;
    let pixels = cin.values().len();
    spec.check_fields(pixels)?;
    let p = &spec.params;
    let delta = p.delta_c.as_ref().unwrap_or(&ZERO_CHANNEL);

    let data: Vec<[f64; 3]> = cin
        .values()
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let mut out = c;
            match spec.variant {
                Residual | IntensityDivision | IntensityFractional | IntensityQuadratic => {
                    let d = delta.at(k);
                    for ch in 0..3 {
                        out[ch] = c[ch] + d[ch];
                    }
                }
                EndToEnd => out = delta.at(k),
                ChromaGamma => {
                    let g = p.gamma_c.as_ref().map_or([1.0; 3], |g| g.at(k));
                    for ch in 0..3 {
                        out[ch] = g[ch] * c[ch];
                    }
                }
                GatedChromaResidual => {
                    let w = p.w.as_ref().map_or([0.0; 3], |w| w.at(k));
                    let d = delta.at(k);
                    for ch in 0..3 {
                        out[ch] = c[ch] + w[ch] * d[ch];
                    }
                }
                ChromaAffine => {
                    let a = p.alpha_c.as_ref().map_or([1.0; 3], |a| a.at(k));
                    let b = p.beta_c.as_ref().map_or([0.0; 3], |b| b.at(k));
                    for ch in 0..3 {
                        out[ch] = a[ch] * c[ch] + b[ch];
                    }
                }
            }
            out
        })
        .collect();
    let raw = ChromaticityMap::new(cin.width(), cin.height(), data)?;
    Ok(constrain_chromaticity(&raw))
}

/// Maps a max-baseline decomposition to constrained output components.
pub fn map_decoupled(
    dec: &DecoupledImage,
    spec: &MappingSpec,
    gate: Option<&GateParams>,
    eps: Epsilon,
) -> Result<DecoupledImage> {
    if dec.baseline() != Baseline::Max {
        return Err(IcdError::Config(format!(
            "mappings operate on the max baseline, got {}",
            dec.baseline()
        )));
    }
    let gated;
    let chroma_in = match gate {
        Some(g) => {
            gated = chroma_gate(dec.intensity(), dec.chroma(), g)?;
            &gated
        }
        None => dec.chroma(),
    };
    let intensity = apply_intensity_mapping(spec, dec.intensity(), eps)?;
    let chroma = apply_chroma_mapping(spec, chroma_in)?;
    DecoupledImage::new(intensity, chroma, Baseline::Max)
}

/// decompose -> optional gate -> mappings -> constraints -> inverse -> clip.
pub fn enhance(img: &RgbImage, spec: &MappingSpec, gate: Option<&GateParams>, eps: Epsilon) -> Result<RgbImage> {
    let dec = decompose(img, eps, Baseline::Max)?;
    let out = map_decoupled(&dec, spec, gate, eps)?;
    reconstruct(&out, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps() -> Epsilon {
        Epsilon::default()
    }

    fn single(i: f64) -> IntensityMap {
        IntensityMap::new(1, 1, vec![i]).unwrap()
    }

    #[test]
    fn fractional_value() {
        let spec = MappingSpec::fractional(1.0).unwrap();
        let out = apply_intensity_mapping(&spec, &single(0.4), eps()).unwrap();
        assert!((out.values()[0] - 0.3999600039996001).abs() < 1e-15);
    }

    #[test]
    fn quadratic_identity_and_division() {
        let out = apply_intensity_mapping(&MappingSpec::quadratic(0.0).unwrap(), &single(0.3), eps()).unwrap();
        assert_eq!(out.values()[0], 0.3);
        let out = apply_intensity_mapping(&MappingSpec::division(0.25).unwrap(), &single(0.2), eps()).unwrap();
        assert!((out.values()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn end_to_end_intensity_is_clamped() {
        let spec = MappingSpec::end_to_end(-0.5, 0.0).unwrap();
        let out = apply_intensity_mapping(&spec, &single(0.7), eps()).unwrap();
        assert_eq!(out.values()[0], 1e-4);
    }

    #[test]
    fn chroma_identities() {
        let cin = ChromaticityMap::new(2, 1, vec![[0.0, -0.3, -2.0], [-0.1, 0.0, -0.7]]).unwrap();
        for spec in [
            MappingSpec::chroma_gamma(1.0).unwrap(),
            MappingSpec::chroma_affine(1.0, 0.0).unwrap(),
            MappingSpec::gated_residual(0.0, [0.4, -0.2, 3.0]).unwrap(),
            MappingSpec::identity(),
        ] {
            assert_eq!(apply_chroma_mapping(&spec, &cin).unwrap(), cin, "{}", spec.variant());
        }
    }

    #[test]
    fn chroma_output_is_clamped() {
        let cin = ChromaticityMap::new(1, 1, vec![[0.0, -0.3, -2.0]]).unwrap();
        let spec = MappingSpec::residual(0.0, [0.5, 0.5, 0.5]);
        let out = apply_chroma_mapping(&spec, &cin).unwrap();
        assert_eq!(out.values()[0], [0.0, 0.0, -1.5]);
    }

    #[test]
    fn missing_parameters_are_configuration_errors() {
        for variant in [
            MappingVariant::EndToEnd,
            MappingVariant::IntensityDivision,
            MappingVariant::IntensityFractional,
            MappingVariant::IntensityQuadratic,
            MappingVariant::ChromaGamma,
            MappingVariant::GatedChromaResidual,
            MappingVariant::ChromaAffine,
        ] {
            assert!(
                matches!(MappingSpec::new(variant, MappingParams::default()), Err(IcdError::Config(_))),
                "{variant}"
            );
        }
        assert!(MappingSpec::new(MappingVariant::Residual, MappingParams::default()).is_ok());
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(MappingSpec::division(0.0), Err(IcdError::Domain(_))));
        assert!(matches!(MappingSpec::division(-2.0), Err(IcdError::Domain(_))));
        assert!(matches!(MappingSpec::fractional(0.0), Err(IcdError::Domain(_))));
        assert!(matches!(MappingSpec::chroma_gamma(0.0), Err(IcdError::Domain(_))));
        assert!(matches!(MappingSpec::gated_residual(1.5, 0.0), Err(IcdError::Domain(_))));
        assert!(matches!(
            MappingSpec::division(ScalarParam::Field(vec![1.0, 0.0])),
            Err(IcdError::Domain(_))
        ));
    }

    #[test]
    fn field_length_mismatch() {
        let spec = MappingSpec::division(ScalarParam::Field(vec![0.5; 3])).unwrap();
        assert!(matches!(
            apply_intensity_mapping(&spec, &IntensityMap::filled(2, 2, 0.1), eps()),
            Err(IcdError::Dimension { .. })
        ));
    }

    #[test]
    fn per_pixel_fields_are_indexed_row_major() {
        let spec = MappingSpec::division(ScalarParam::Field(vec![0.5, 0.25])).unwrap();
        let out = apply_intensity_mapping(&spec, &IntensityMap::new(2, 1, vec![0.2, 0.2]).unwrap(), eps()).unwrap();
        assert_eq!(out.values(), &[0.4, 0.8]);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in MappingVariant::ALL {
            assert_eq!(v.name().parse::<MappingVariant>().unwrap(), v);
        }
        assert_eq!("Chroma_Affine".parse::<MappingVariant>().unwrap(), MappingVariant::ChromaAffine);
        let err = "sigmoid".parse::<MappingVariant>().unwrap_err().to_string();
        assert!(err.contains("intensity-division"));
    }

    #[test]
    fn enhance_identity_and_gate() {
        let img = RgbImage::from_fn(4, 3, |x, y| [0.1 + 0.2 * x as f64, 0.05 + 0.3 * y as f64, 0.4]).unwrap();
        let out = enhance(&img, &MappingSpec::identity(), None, eps()).unwrap();
        for (a, b) in out.pixels().iter().zip(img.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-12);
            }
        }
        // with a gate, dark pixels are pulled toward gray but never above the envelope
        let gated = enhance(&img, &MappingSpec::identity(), Some(&GateParams::default()), eps()).unwrap();
        for (a, b) in gated.pixels().iter().zip(img.pixels()) {
            let env = b[0].max(b[1]).max(b[2]);
            for c in 0..3 {
                assert!(a[c] >= b[c] - 1e-12);
                assert!(a[c] <= env + 1e-12);
            }
        }
    }

    #[test]
    fn enhance_rejects_non_max_decomposition() {
        let img = RgbImage::filled(1, 1, [0.4; 3]).unwrap();
        let dec = decompose(&img, eps(), Baseline::Min).unwrap();
        assert!(map_decoupled(&dec, &MappingSpec::identity(), None, eps()).is_err());
    }
}
