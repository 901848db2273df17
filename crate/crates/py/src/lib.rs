//! Python bindings for `splatstego`.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use splatstego::attacks;
use splatstego::fixedpoint::QuantParams;
use splatstego::key::StegoKey;
use splatstego::metrics;
use splatstego::opacity::{TrainConfig, DEFAULT_TAU};
use splatstego::pipeline::{self, EmbedConfig};
use splatstego::scene::{load_scene, read_scene, save_scene, write_scene, GaussianScene};
use splatstego::sh_stego::{self, StegoParams, DEFAULT_K};
use splatstego::synth::{self, SynthConfig};
use splatstego::{Error, ImageBuffer};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for splatstego::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn stego_params(k: u32, gamma: u32, c_max: f64) -> PyResult<StegoParams> {
    StegoParams::new(k, QuantParams::new(gamma, c_max).py()?).py()
}

/// A Gaussian splatting asset.
#[pyclass(name = "Scene", module = "splatstego", from_py_object)]
#[derive(Clone)]
pub struct PyScene {
    inner: GaussianScene,
}

#[pymethods]
impl PyScene {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: read_scene(path).py()? })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self { inner: load_scene(data).py()? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        write_scene(path, &self.inner).py()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &save_scene(&self.inner).py()?))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Scene({} primitives)", self.inner.len())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner.bits_eq(&other.inner)
    }

    #[getter]
    fn positions(&self) -> Vec<[f32; 3]> {
        self.inner.positions.clone()
    }

    /// Activated opacities in `[0, 1]`.
    #[getter]
    fn opacities(&self) -> Vec<f32> {
        self.inner.opacities()
    }

    /// SH coefficients of primitive `i` as 16 rows of RGB.
    fn sh(&self, i: usize) -> PyResult<Vec<[f32; 3]>> {
        self.inner
            .sh
            .get(i)
            .map(|b| b.coeffs.to_vec())
            .ok_or_else(|| PyValueError::new_err(format!("index {i} out of range")))
    }

    fn select(&self, indices: Vec<usize>) -> PyResult<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.inner.len()) {
            return Err(PyValueError::new_err(format!("index {i} out of range")));
        }
        Ok(Self { inner: self.inner.select(&indices) })
    }

    /// True when everything but the SH fields is bit-identical.
    fn same_geometry(&self, other: &Self) -> bool {
        self.inner.non_sh_bits_eq(&other.inner)
    }

    fn prune_sequential(&self, ratio: f64) -> PyResult<Self> {
        Ok(Self { inner: attacks::prune_sequential(&self.inner, ratio).py()? })
    }

    #[pyo3(signature = (ratio, seed = 0))]
    fn prune_random(&self, ratio: f64, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: attacks::prune_random(&self.inner, ratio, seed).py()? })
    }

    #[pyo3(signature = (sigma, seed = 0))]
    fn add_sh_noise(&self, sigma: f64, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: attacks::add_sh_noise(&self.inner, sigma, seed).py()? })
    }

    /// Renders from the default viewpoint.
    #[pyo3(signature = (width = 256, height = 256, background = [0.0, 0.0, 0.0]))]
    fn render(&self, py: Python<'_>, width: usize, height: usize, background: [f32; 3]) -> PyResult<PyImage> {
        let cam = synth::default_camera(width, height);
        let scene = &self.inner;
        let out = py.detach(|| splatstego::render(scene, &cam, background)).py()?;
        Ok(PyImage { inner: out.image })
    }
}

/// An RGB image with float channels in `[0, 1]`.
#[pyclass(name = "Image", module = "splatstego", from_py_object)]
#[derive(Clone)]
pub struct PyImage {
    inner: ImageBuffer,
}

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f32>) -> PyResult<Self> {
        Ok(Self { inner: ImageBuffer::from_rgb(width, height, data).py()? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: ImageBuffer::read_ppm(path).py()? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_ppm(path).py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    /// Row-major interleaved RGB.
    fn data(&self) -> Vec<f32> {
        self.inner.data().to_vec()
    }

    fn psnr(&self, other: &Self) -> PyResult<f64> {
        metrics::psnr(&self.inner, &other.inner).py()
    }

    fn ssim(&self, other: &Self) -> PyResult<f64> {
        metrics::ssim(&self.inner, &other.inner).py()
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.width(), self.inner.height())
    }
}

/// The secret needed to recover a hidden scene.
#[pyclass(name = "Key", module = "splatstego", from_py_object)]
#[derive(Clone)]
pub struct PyKey {
    inner: StegoKey,
}

#[pymethods]
impl PyKey {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: StegoKey::read(path).py()? })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self { inner: StegoKey::from_bytes(data).py()? })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(path).py()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &self.inner.to_bytes().py()?))
    }

    #[getter]
    fn k(&self) -> u32 {
        self.inner.k
    }

    #[getter]
    fn gamma(&self) -> u32 {
        self.inner.gamma
    }

    #[getter]
    fn c_max(&self) -> f64 {
        self.inner.c_max
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }

    fn __len__(&self) -> usize {
        self.inner.coords.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Key(k={}, gamma={}, tau={}, {} coordinates)",
            self.inner.k,
            self.inner.gamma,
            self.inner.tau,
            self.inner.coords.len()
        )
    }
}

/// Generates a synthetic cover and a hidden asset sharing its geometry.
///
/// `config` is optional `key = value` text; `count` and `seed` override it.
#[pyfunction]
#[pyo3(signature = (count = None, seed = None, config = None))]
fn generate(count: Option<usize>, seed: Option<u64>, config: Option<&str>) -> PyResult<(PyScene, PyScene)> {
    let mut cfg = match config {
        Some(text) => SynthConfig::parse(text).py()?,
        None => SynthConfig::default(),
    };
    cfg.count = count.unwrap_or(cfg.count);
    cfg.seed = seed.unwrap_or(cfg.seed);
    let (cover, hidden) = synth::gen_scene_pair(&cfg).py()?;
    let hidden = hidden.to_scene(&cover, |_| true);
    Ok((PyScene { inner: cover }, PyScene { inner: hidden }))
}

/// Hides `hidden` inside `cover`; returns the stego scene, the key and a
/// one-line summary.
#[pyfunction]
#[pyo3(signature = (cover, hidden, k = DEFAULT_K, gamma = 32, c_max = 8.0, tau = DEFAULT_TAU, epochs = 2000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn embed(
    py: Python<'_>,
    cover: &PyScene,
    hidden: &PyScene,
    k: u32,
    gamma: u32,
    c_max: f64,
    tau: f64,
    epochs: usize,
    seed: u64,
) -> PyResult<(PyScene, PyKey, String)> {
    let cfg = EmbedConfig {
        params: stego_params(k, gamma, c_max)?,
        tau,
        train: TrainConfig { max_epochs: epochs, seed, ..Default::default() },
    };
    let (cover, hidden) = (&cover.inner, &hidden.inner);
    let out = py
        .detach(|| {
            let attrs = pipeline::hidden_from_scene(cover, hidden)?;
            pipeline::embed(cover, &attrs, &cfg)
        })
        .py()?;
    Ok((
        PyScene { inner: out.stego },
        PyKey { inner: out.key },
        out.diagnostics.to_string(),
    ))
}

/// Recovers the hidden scene; `max_order` keeps SH orders up to it.
#[pyfunction]
#[pyo3(signature = (stego, key, max_order = None))]
fn extract(stego: &PyScene, key: &PyKey, max_order: Option<usize>) -> PyResult<PyScene> {
    if max_order.is_some_and(|m| m > 3) {
        return Err(PyValueError::new_err("max_order must be at most 3"));
    }
    let out = pipeline::extract(&stego.inner, &key.inner, max_order).py()?;
    Ok(PyScene { inner: out.scene })
}

/// Bits of hidden coefficient carried by carrier slot `j`.
#[pyfunction]
#[pyo3(signature = (j, k = DEFAULT_K))]
fn bit_budget(j: usize, k: u32) -> PyResult<u32> {
    sh_stego::bit_budget(j, k).py()
}

#[pyfunction]
#[pyo3(signature = (value, gamma = 32, c_max = 8.0))]
fn quantize(value: f64, gamma: u32, c_max: f64) -> PyResult<u32> {
    QuantParams::new(gamma, c_max).py()?.quantize(value).py()
}

#[pyfunction]
#[pyo3(signature = (code, gamma = 32, c_max = 8.0))]
fn dequantize(code: u32, gamma: u32, c_max: f64) -> PyResult<f32> {
    let q = QuantParams::new(gamma, c_max).py()?;
    if code > q.max_code() {
        return Err(PyValueError::new_err(format!("code {code} exceeds {} bits", gamma)));
    }
    Ok(q.dequantize(code))
}

#[pymodule]
fn splatstego_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScene>()?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyKey>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(bit_budget, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(dequantize, m)?)?;
    Ok(())
}
