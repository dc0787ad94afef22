//! Log-domain intensity/chromaticity decoupling of RGB images.
//!
//! An RGB pixel is split into its intensity envelope `I_max = max_c I_c` and
//! per-channel log-ratios `C_c = ln(I_c + eps) - ln(I_max + eps)`. The split is
//! exactly invertible, and constraining `I_max >= eps`, `C <= 0` before the
//! inverse keeps every reconstructed channel below the output envelope.
//!
//! Modules:
//! - [`transform`]: forward/inverse transform, output constraints, baselines
//! - [`gate`]: intensity-aware chromaticity gate
//! - [`properties`]: non-positivity, zero anchor, ratio and illumination checks
//! - [`mappings`]: the eight decoupled update rules and [`enhance`]
//! - [`fit`]: grid search for the scalar parameter of intensity mappings
//! - [`metrics`]: PSNR, SSIM, MSE, Rel-MAE and the joint loss
//! - [`noise`]: first-order chroma noise model and Monte-Carlo validation

pub mod error;
pub mod fit;
pub mod gate;
pub mod image;
pub mod mappings;
pub mod metrics;
pub mod noise;
pub mod properties;
pub mod transform;

pub use error::{IcdError, Result};
pub use fit::{fit_scalar_param, FitObjective, FitResult, ParamGrid};
pub use gate::{chroma_gate, GateParams};
pub use image::{ChromaticityMap, Epsilon, IntensityMap, RgbImage};
pub use mappings::{
    apply_chroma_mapping, apply_intensity_mapping, enhance, map_decoupled, ChannelParam, MappingParams,
    MappingSpec, MappingVariant, ScalarParam,
};
pub use metrics::{mse, psnr, rel_mae, ssim, total_loss, LossBreakdown, LossWeights, MetricsReport};
pub use noise::{
    linearized_chroma_perturbation, monte_carlo_chroma_agreement, rgb_jacobian_amplification, synthesize_scene,
    AgreementReport, NoiseModel, ScalingScene,
};
pub use properties::{check_illumination_invariance, check_properties, IlluminationReport, PropertyReport};
pub use transform::{
    constrain, constrain_chromaticity, constrain_intensity, decompose, reconstruct, reconstruct_constrained,
    reconstruct_unclipped, Baseline, DecoupledImage,
};
