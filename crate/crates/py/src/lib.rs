//! Python bindings. Images are nested sequences shaped `[height][width][3]`
//! (lists or numpy arrays); maps come back as nested lists.

use icd_core as core;
use icd_core::{
    Baseline, ChannelParam, ChromaticityMap, DecoupledImage, Epsilon, GateParams, IcdError, IntensityMap,
    LossWeights, MappingParams, MappingSpec, MappingVariant, NoiseModel, ParamGrid, RgbImage, ScalarParam,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: IcdError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows_to_flat<T: Copy>(rows: Vec<Vec<T>>) -> PyResult<(usize, usize, Vec<T>)> {
    let h = rows.len();
    let w = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != w) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok((w, h, rows.into_iter().flatten().collect()))
}

fn flat_to_rows<T: Clone>(w: usize, data: &[T]) -> Vec<Vec<T>> {
    if w == 0 {
        return Vec::new();
    }
    data.chunks(w).map(<[T]>::to_vec).collect()
}

fn image(obj: Vec<Vec<[f64; 3]>>) -> PyResult<RgbImage> {
    let (w, h, data) = rows_to_flat(obj)?;
    RgbImage::new(w, h, data).map_err(err)
}

fn eps_of(eps: f64) -> PyResult<Epsilon> {
    Epsilon::new(eps).map_err(err)
}

fn scalar_param(obj: Option<&Bound<'_, PyAny>>) -> PyResult<Option<ScalarParam>> {
    let Some(obj) = obj else { return Ok(None) };
    if let Ok(v) = obj.extract::<f64>() {
        return Ok(Some(ScalarParam::Uniform(v)));
    }
    let rows: Vec<Vec<f64>> = obj.extract()?;
    Ok(Some(ScalarParam::Field(rows_to_flat(rows)?.2)))
}

fn channel_param(obj: Option<&Bound<'_, PyAny>>) -> PyResult<Option<ChannelParam>> {
    let Some(obj) = obj else { return Ok(None) };
    if let Ok(v) = obj.extract::<f64>() {
        return Ok(Some(ChannelParam::Uniform(v)));
    }
    if let Ok(v) = obj.extract::<[f64; 3]>() {
        return Ok(Some(ChannelParam::PerChannel(v)));
    }
    let rows: Vec<Vec<[f64; 3]>> = obj.extract()?;
    Ok(Some(ChannelParam::Field(rows_to_flat(rows)?.2)))
}

/// Intensity envelope and chromaticity of an image.
#[pyclass(module = "icd", name = "Decomposition", frozen)]
struct PyDecomposition {
    inner: DecoupledImage,
    eps: Epsilon,
}

#[pymethods]
impl PyDecomposition {
    #[new]
    #[pyo3(signature = (intensity, chroma, baseline="max", eps=Epsilon::DEFAULT))]
    fn new(intensity: Vec<Vec<f64>>, chroma: Vec<Vec<[f64; 3]>>, baseline: &str, eps: f64) -> PyResult<Self> {
        let (w, h, i) = rows_to_flat(intensity)?;
        let (cw, ch, c) = rows_to_flat(chroma)?;
        let baseline: Baseline = baseline.parse().map_err(err)?;
        let intensity = IntensityMap::new(w, h, i).map_err(err)?;
        let chroma = ChromaticityMap::new(cw, ch, c).map_err(err)?;
        Ok(PyDecomposition {
            inner: DecoupledImage::new(intensity, chroma, baseline).map_err(err)?,
            eps: eps_of(eps)?,
        })
    }

    #[getter]
    fn intensity(&self) -> Vec<Vec<f64>> {
        flat_to_rows(self.inner.dims().0, self.inner.intensity().values())
    }

    #[getter]
    fn chroma(&self) -> Vec<Vec<[f64; 3]>> {
        flat_to_rows(self.inner.dims().0, self.inner.chroma().values())
    }

    #[getter]
    fn baseline(&self) -> &'static str {
        self.inner.baseline().name()
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.eps.get()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.dims().0
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.dims().1
    }

    fn __repr__(&self) -> String {
        let (w, h) = self.inner.dims();
        format!("Decomposition({w}x{h}, baseline={}, eps={})", self.inner.baseline(), self.eps.get())
    }
}

#[pyfunction]
#[pyo3(signature = (image, eps=Epsilon::DEFAULT, baseline="max"))]
fn decompose(image: Vec<Vec<[f64; 3]>>, eps: f64, baseline: &str) -> PyResult<PyDecomposition> {
    let img = self::image(image)?;
    let eps = eps_of(eps)?;
    let baseline: Baseline = baseline.parse().map_err(err)?;
    Ok(PyDecomposition {
        inner: core::decompose(&img, eps, baseline).map_err(err)?,
        eps,
    })
}

/// Inverse transform, clipped to [0, 1]. `constrained` applies the output
/// constraints first (max baseline only).
#[pyfunction]
#[pyo3(signature = (decomposition, constrained=true))]
fn reconstruct(decomposition: &PyDecomposition, constrained: bool) -> PyResult<Vec<Vec<[f64; 3]>>> {
    let d = &decomposition.inner;
    let img = if constrained {
        core::reconstruct_constrained(d, decomposition.eps)
    } else {
        core::reconstruct(d, decomposition.eps)
    }
    .map_err(err)?;
    Ok(flat_to_rows(img.width(), img.pixels()))
}

#[pyfunction]
#[pyo3(signature = (intensity, chroma, alpha=GateParams::DEFAULT_ALPHA, gamma=GateParams::DEFAULT_GAMMA))]
fn chroma_gate(
    intensity: Vec<Vec<f64>>,
    chroma: Vec<Vec<[f64; 3]>>,
    alpha: f64,
    gamma: f64,
) -> PyResult<Vec<Vec<[f64; 3]>>> {
    let (w, h, i) = rows_to_flat(intensity)?;
    let (cw, ch, c) = rows_to_flat(chroma)?;
    let gate = GateParams::new(alpha, gamma).map_err(err)?;
    let out = core::chroma_gate(
        &IntensityMap::new(w, h, i).map_err(err)?,
        &ChromaticityMap::new(cw, ch, c).map_err(err)?,
        &gate,
    )
    .map_err(err)?;
    Ok(flat_to_rows(w, out.values()))
}

#[pyfunction]
fn gate_value(i: f64, alpha: f64, gamma: f64) -> PyResult<f64> {
    Ok(GateParams::new(alpha, gamma).map_err(err)?.value(i))
}

#[pyfunction]
fn mapping_variants() -> Vec<&'static str> {
    MappingVariant::ALL.iter().map(|v| v.name()).collect()
}

/// Applies a decoupled mapping. Parameters are floats, `(r, g, b)` triples,
/// or per-pixel nested lists.
#[pyfunction]
#[pyo3(signature = (
    image, variant="residual", *, delta_i=None, delta_c=None, L=None, u=None, a=None,
    gamma_c=None, w=None, alpha_c=None, beta_c=None, gate_alpha=None, gate_gamma=None,
    eps=Epsilon::DEFAULT
))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn enhance(
    image: Vec<Vec<[f64; 3]>>,
    variant: &str,
    delta_i: Option<&Bound<'_, PyAny>>,
    delta_c: Option<&Bound<'_, PyAny>>,
    L: Option<&Bound<'_, PyAny>>,
    u: Option<&Bound<'_, PyAny>>,
    a: Option<&Bound<'_, PyAny>>,
    gamma_c: Option<&Bound<'_, PyAny>>,
    w: Option<&Bound<'_, PyAny>>,
    alpha_c: Option<&Bound<'_, PyAny>>,
    beta_c: Option<&Bound<'_, PyAny>>,
    gate_alpha: Option<f64>,
    gate_gamma: Option<f64>,
    eps: f64,
) -> PyResult<Vec<Vec<[f64; 3]>>> {
    let img = self::image(image)?;
    let variant: MappingVariant = variant.parse().map_err(err)?;
    let params = MappingParams {
        delta_i: scalar_param(delta_i)?,
        delta_c: channel_param(delta_c)?,
        l: scalar_param(L)?,
        u: scalar_param(u)?,
        a: scalar_param(a)?,
        gamma_c: channel_param(gamma_c)?,
        w: channel_param(w)?,
        alpha_c: channel_param(alpha_c)?,
        beta_c: channel_param(beta_c)?,
    };
    let spec = MappingSpec::new(variant, params).map_err(err)?;
    let gate = match (gate_alpha, gate_gamma) {
        (None, None) => None,
        (ga, gg) => Some(
            GateParams::new(
                ga.unwrap_or(GateParams::DEFAULT_ALPHA),
                gg.unwrap_or(GateParams::DEFAULT_GAMMA),
            )
            .map_err(err)?,
        ),
    };
    let out = core::enhance(&img, &spec, gate.as_ref(), eps_of(eps)?).map_err(err)?;
    Ok(flat_to_rows(out.width(), out.pixels()))
}

/// Grid search for the scalar parameter; returns `(param, loss)`.
#[pyfunction]
#[pyo3(signature = (dark, reference, variant, grid, eps=Epsilon::DEFAULT))]
fn fit_scalar_param(
    dark: Vec<Vec<[f64; 3]>>,
    reference: Vec<Vec<[f64; 3]>>,
    variant: &str,
    grid: &str,
    eps: f64,
) -> PyResult<(f64, f64)> {
    let grid: ParamGrid = grid.parse().map_err(err)?;
    let variant: MappingVariant = variant.parse().map_err(err)?;
    let r = core::fit_scalar_param(
        &self::image(dark)?,
        &self::image(reference)?,
        variant,
        &grid,
        eps_of(eps)?,
        core::FitObjective::DefaultTotalLoss,
    )
    .map_err(err)?;
    Ok((r.param, r.loss))
}

#[pyfunction]
fn psnr(a: Vec<Vec<[f64; 3]>>, b: Vec<Vec<[f64; 3]>>) -> PyResult<f64> {
    core::psnr(&image(a)?, &image(b)?).map_err(err)
}

#[pyfunction]
fn ssim(a: Vec<Vec<[f64; 3]>>, b: Vec<Vec<[f64; 3]>>) -> PyResult<f64> {
    core::ssim(&image(a)?, &image(b)?).map_err(err)
}

#[pyfunction]
fn mse(a: Vec<Vec<[f64; 3]>>, b: Vec<Vec<[f64; 3]>>) -> PyResult<f64> {
    core::mse(&image(a)?, &image(b)?).map_err(err)
}

#[pyfunction]
fn rel_mae(output: Vec<Vec<[f64; 3]>>, reference: Vec<Vec<[f64; 3]>>) -> PyResult<f64> {
    core::rel_mae(&image(output)?, &image(reference)?).map_err(err)
}

/// Full metric set as a dict with keys psnr_db, ssim, mse, rel_mae, l_rgb, l_I, l_C, l_total.
#[pyfunction]
#[pyo3(signature = (output, reference, eps=Epsilon::DEFAULT, lambda_i=1500.0, lambda_c=2500.0))]
fn metrics<'py>(
    py: Python<'py>,
    output: Vec<Vec<[f64; 3]>>,
    reference: Vec<Vec<[f64; 3]>>,
    eps: f64,
    lambda_i: f64,
    lambda_c: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let weights = LossWeights::new(lambda_i, lambda_c, LossWeights::default().smooth_l1_beta).map_err(err)?;
    let m = core::MetricsReport::compute(&image(output)?, &image(reference)?, eps_of(eps)?, &weights).map_err(err)?;
    let d = PyDict::new(py);
    for (k, v) in [
        ("psnr_db", m.psnr_db),
        ("ssim", m.ssim),
        ("mse", m.mse),
        ("rel_mae", m.rel_mae),
        ("l_rgb", m.l_rgb),
        ("l_I", m.l_i),
        ("l_C", m.l_c),
        ("l_total", m.l_total),
    ] {
        d.set_item(k, v)?;
    }
    Ok(d)
}

/// Monte-Carlo comparison of exact and first-order chroma noise.
#[pyfunction]
#[pyo3(signature = (clean, sigma, trials, seed=0, eps=Epsilon::DEFAULT))]
fn monte_carlo_chroma_agreement<'py>(
    py: Python<'py>,
    clean: Vec<Vec<[f64; 3]>>,
    sigma: f64,
    trials: usize,
    seed: u64,
    eps: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let model = NoiseModel::gaussian(sigma).map_err(err)?;
    let r = core::monte_carlo_chroma_agreement(&image(clean)?, &model, trials, eps_of(eps)?, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("trials", r.trials)?;
    d.set_item("pixels", r.pixels)?;
    d.set_item("sigma", r.sigma.to_vec())?;
    d.set_item("seed", r.seed)?;
    d.set_item("mean_abs_exact", r.mean_abs_exact)?;
    d.set_item("mean_abs_predicted", r.mean_abs_predicted)?;
    d.set_item("relative_error", r.relative_error)?;
    d.set_item("excluded_fraction", r.excluded_fraction)?;
    d.set_item("low_signal", r.low_signal)?;
    Ok(d)
}

#[pymodule]
fn icd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDecomposition>()?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(chroma_gate, m)?)?;
    m.add_function(wrap_pyfunction!(gate_value, m)?)?;
    m.add_function(wrap_pyfunction!(mapping_variants, m)?)?;
    m.add_function(wrap_pyfunction!(enhance, m)?)?;
    m.add_function(wrap_pyfunction!(fit_scalar_param, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(rel_mae, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_chroma_agreement, m)?)?;
    m.add("DEFAULT_EPS", Epsilon::DEFAULT)?;
    Ok(())
}
