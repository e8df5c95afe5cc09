//! Python bindings: `import wdrcm`.

use std::sync::Arc;

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyTuple;
use serde::Serialize;

fn err(e: wdrcm::Error) -> PyErr {
    match e {
        wdrcm::Error::Numeric { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Converts any serializable report into plain Python objects.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn kernel(name: &str, gamma: f64) -> PyResult<wdrcm::KernelSpec> {
    let v = wdrcm::KernelVariant::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown kernel '{name}'")))?;
    wdrcm::KernelSpec::new(v, gamma).map_err(err)
}

fn sampler(name: &str) -> PyResult<wdrcm::SamplerKind> {
    match name {
        "layered" => Ok(wdrcm::SamplerKind::Layered),
        "naive" => Ok(wdrcm::SamplerKind::Naive),
        _ => Err(PyValueError::new_err(format!("unknown sampler '{name}'"))),
    }
}

#[pyclass(name = "ModelParams", frozen)]
#[derive(Clone)]
struct PyModelParams(wdrcm::ModelParams);

#[pymethods]
impl PyModelParams {
    #[new]
    #[pyo3(signature = (kernel_name, gamma, delta, beta, profile = "hard-polynomial", cap = None))]
    fn new(kernel_name: &str, gamma: f64, delta: f64, beta: f64, profile: &str, cap: Option<f64>) -> PyResult<Self> {
        let pv = wdrcm::ProfileVariant::parse(profile)
            .ok_or_else(|| PyValueError::new_err(format!("unknown profile '{profile}'")))?;
        let p = wdrcm::ProfileSpec::new(pv, delta, cap).map_err(err)?;
        Ok(Self(wdrcm::ModelParams::new(kernel(kernel_name, gamma)?, p, beta).map_err(err)?))
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.kernel.gamma
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.profile.delta
    }

    #[getter]
    fn kernel(&self) -> &'static str {
        self.0.kernel.variant.name()
    }

    fn with_beta(&self, beta: f64) -> PyResult<Self> {
        let m = self.0.with_beta(beta);
        m.validate().map_err(err)?;
        Ok(Self(m))
    }

    /// Edge probability for marks `s, t` at distance `d`.
    fn probability(&self, s: f64, t: f64, d: f64) -> f64 {
        self.0.probability(s, t, d)
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.0).expect("model serializes")
    }

    fn __repr__(&self) -> String {
        format!("ModelParams({})", self.to_json())
    }
}

#[pyclass(name = "PointProcess", frozen)]
#[derive(Clone)]
struct PyPointProcess(wdrcm::PointProcessSpec);

#[pymethods]
impl PyPointProcess {
    #[staticmethod]
    #[pyo3(signature = (intensity = 1.0))]
    fn poisson(intensity: f64) -> PyResult<Self> {
        let p = wdrcm::PointProcessSpec::Poisson { intensity };
        p.validate().map_err(err)?;
        Ok(Self(p))
    }

    #[staticmethod]
    fn lattice_bernoulli(retention: f64) -> PyResult<Self> {
        let p = wdrcm::PointProcessSpec::LatticeBernoulli { retention };
        p.validate().map_err(err)?;
        Ok(Self(p))
    }

    #[staticmethod]
    fn deterministic_lattice() -> Self {
        Self(wdrcm::PointProcessSpec::DeterministicLattice)
    }

    /// Palm sample of every point in `[-half_width, half_width]`.
    fn sample_window(&self, half_width: f64, seed: u64) -> PyResult<PyConfiguration> {
        Ok(PyConfiguration(Arc::new(self.0.sample_window(half_width, seed).map_err(err)?)))
    }

    fn __repr__(&self) -> String {
        format!("PointProcess({})", serde_json::to_string(&self.0).expect("spec serializes"))
    }
}

#[pyclass(name = "Configuration", frozen)]
struct PyConfiguration(Arc<wdrcm::MarkedConfiguration>);

#[pymethods]
impl PyConfiguration {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self(Arc::new(wdrcm::MarkedConfiguration::from_json(text).map_err(err)?)))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn indices(&self) -> Vec<i64> {
        self.0.vertices().iter().map(|v| v.index).collect()
    }

    fn locations(&self) -> Vec<f64> {
        self.0.vertices().iter().map(|v| v.location).collect()
    }

    fn marks(&self) -> Vec<f64> {
        self.0.vertices().iter().map(|v| v.mark).collect()
    }

    /// Position of the root vertex in the vertex list, if there is one.
    fn root_position(&self) -> Option<usize> {
        self.0.root_position()
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }
}

#[pyclass(name = "Graph", frozen)]
struct PyGraph(wdrcm::GraphSample);

#[pymethods]
impl PyGraph {
    #[getter]
    fn n_vertices(&self) -> usize {
        self.0.n_vertices()
    }

    /// Edges as pairs of vertex indices.
    fn edges(&self) -> Vec<(i64, i64)> {
        self.0.edges().to_vec()
    }

    fn degrees(&self) -> Vec<usize> {
        self.0.degrees()
    }

    fn configuration(&self) -> PyConfiguration {
        PyConfiguration(self.0.config_arc().clone())
    }

    fn contains_edge(&self, a: i64, b: i64) -> bool {
        self.0.contains_edge(a, b)
    }

    /// Component sizes, largest cluster and root statistics as a dict.
    fn components(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &wdrcm::components(&self.0))
    }

    #[pyo3(signature = (tail_fraction = 0.05))]
    fn degree_report(&self, py: Python<'_>, tail_fraction: f64) -> PyResult<PyObject> {
        to_py(py, &wdrcm::degree_report(&self.0, tail_fraction).map_err(err)?)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }
}

#[pyfunction]
#[pyo3(signature = (config, model, seed, sampler_name = "layered"))]
fn sample_edges(
    py: Python<'_>,
    config: &PyConfiguration,
    model: &PyModelParams,
    seed: u64,
    sampler_name: &str,
) -> PyResult<PyGraph> {
    let kind = sampler(sampler_name)?;
    let cfg = config.0.clone();
    let m = model.0;
    let g = py.allow_threads(|| wdrcm::sample_edges(cfg, &m, seed, kind)).map_err(err)?;
    Ok(PyGraph(g))
}

#[pyfunction]
#[pyo3(signature = (n, model, seed, sampler_name = "layered"))]
fn sample_finite_graph(py: Python<'_>, n: usize, model: &PyModelParams, seed: u64, sampler_name: &str) -> PyResult<PyGraph> {
    let kind = sampler(sampler_name)?;
    let m = model.0;
    let g = py.allow_threads(|| wdrcm::sample_finite_graph(n, &m, seed, kind)).map_err(err)?;
    Ok(PyGraph(g))
}

/// `I(n)` for the model's kernel and profile.
#[pyfunction]
fn integral_i(model: &PyModelParams, n: f64) -> PyResult<f64> {
    wdrcm::integral_i(&model.0.kernel, &model.0.profile, n).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (model, lo = 10.0, hi = 1e8, count = 15))]
fn delta_eff_estimate(py: Python<'_>, model: &PyModelParams, lo: f64, hi: f64, count: usize) -> PyResult<PyObject> {
    let grid = wdrcm::theory::log_grid(lo, hi, count);
    let r = wdrcm::delta_eff_estimate(&model.0.kernel, &model.0.profile, &grid).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
fn delta_eff_closed_form(kernel_name: &str, gamma: f64, delta: f64) -> PyResult<Option<f64>> {
    let k = kernel(kernel_name, gamma)?;
    Ok(wdrcm::delta_eff_closed_form(k.variant, delta, gamma))
}

/// `(label, provenance)` for a kernel and decay exponent.
#[pyfunction]
fn classify_regime<'py>(py: Python<'py>, kernel_name: &str, gamma: f64, delta: f64) -> PyResult<Bound<'py, PyTuple>> {
    let r = wdrcm::classify_regime(&kernel(kernel_name, gamma)?, delta).map_err(err)?;
    PyTuple::new(py, [r.label.name().to_string(), r.provenance])
}

#[pyfunction]
#[pyo3(signature = (model, point_process, half_width, replicas, seed, sampler_name = "layered"))]
fn theta_estimate(
    py: Python<'_>,
    model: &PyModelParams,
    point_process: &PyPointProcess,
    half_width: f64,
    replicas: usize,
    seed: u64,
    sampler_name: &str,
) -> PyResult<PyObject> {
    let kind = sampler(sampler_name)?;
    let (m, pp) = (model.0, point_process.0);
    let p = py
        .allow_threads(|| wdrcm::clusters::theta_estimate_with(&m, &pp, half_width, replicas, seed, kind))
        .map_err(err)?;
    to_py(py, &p)
}

#[pyfunction]
fn crossing_sweep(
    py: Python<'_>,
    model: &PyModelParams,
    point_process: &PyPointProcess,
    k_max: u32,
    replicas: usize,
    seed: u64,
) -> PyResult<PyObject> {
    let (m, pp) = (model.0, point_process.0);
    let r = py
        .allow_threads(|| wdrcm::multiscale::crossing_sweep(&m, &pp, k_max, replicas, seed))
        .map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
fn derive_seed(master: u64, grid: u64, replica: u64) -> u64 {
    wdrcm::derive_seed(master, grid, replica)
}

#[pymodule(name = "wdrcm")]
pub fn wdrcm_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelParams>()?;
    m.add_class::<PyPointProcess>()?;
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(sample_edges, m)?)?;
    m.add_function(wrap_pyfunction!(sample_finite_graph, m)?)?;
    m.add_function(wrap_pyfunction!(integral_i, m)?)?;
    m.add_function(wrap_pyfunction!(delta_eff_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(delta_eff_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(classify_regime, m)?)?;
    m.add_function(wrap_pyfunction!(theta_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(crossing_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    Ok(())
}
