//! Python bindings for `jde-core`.
//!
//! Scalar results come back as Python numbers, structured results (reports,
//! campaigns, verdicts, decisions) as plain dicts and lists.

use jde_core::harness::{self, db_to_linear};
use jde_core::stream::{substream, Purpose};
use jde_core::{JdeError, JointTargetParameter, PosteriorEngine, Rule};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

fn py_err(e: JdeError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn parse_rules(rules: Option<Vec<String>>) -> PyResult<Vec<Rule>> {
    match rules {
        None => Ok(Rule::ALL.to_vec()),
        Some(names) => names.iter().map(|n| n.parse::<Rule>().map_err(PyValueError::new_err)).collect(),
    }
}

/// System configuration; mirrors `jde_core::SystemConfig`.
#[pyclass(name = "SystemConfig", get_all, set_all, from_py_object)]
#[derive(Clone)]
struct PySystemConfig {
    n_samples: usize,
    snr: f64,
    prior_present: f64,
    oversample: usize,
    seed: u64,
    edge_margin: f64,
    noiseless: bool,
}

impl PySystemConfig {
    fn core(&self) -> PyResult<jde_core::SystemConfig> {
        let c = jde_core::SystemConfig {
            n_samples: self.n_samples,
            snr: self.snr,
            prior_present: self.prior_present,
            oversample: self.oversample,
            seed: self.seed,
            edge_margin: self.edge_margin,
            noiseless: self.noiseless,
        };
        c.validate().map_err(py_err)?;
        Ok(c)
    }

    fn from_core(c: jde_core::SystemConfig) -> Self {
        Self {
            n_samples: c.n_samples,
            snr: c.snr,
            prior_present: c.prior_present,
            oversample: c.oversample,
            seed: c.seed,
            edge_margin: c.edge_margin,
            noiseless: c.noiseless,
        }
    }
}

#[pymethods]
impl PySystemConfig {
    #[new]
    #[pyo3(signature = (n_samples=None, snr=None, snr_db=None, prior_present=None, oversample=None, seed=None, edge_margin=None, noiseless=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n_samples: Option<usize>,
        snr: Option<f64>,
        snr_db: Option<f64>,
        prior_present: Option<f64>,
        oversample: Option<usize>,
        seed: Option<u64>,
        edge_margin: Option<f64>,
        noiseless: bool,
    ) -> PyResult<Self> {
        let d = jde_core::SystemConfig::default();
        let snr = match (snr, snr_db) {
            (Some(_), Some(_)) => return Err(PyValueError::new_err("give snr or snr_db, not both")),
            (Some(s), None) => s,
            (None, Some(db)) => db_to_linear(db),
            (None, None) => d.snr,
        };
        let c = Self {
            n_samples: n_samples.unwrap_or(d.n_samples),
            snr,
            prior_present: prior_present.unwrap_or(d.prior_present),
            oversample: oversample.unwrap_or(d.oversample),
            seed: seed.unwrap_or(d.seed),
            edge_margin: edge_margin.unwrap_or(d.edge_margin),
            noiseless,
        };
        c.core()?;
        Ok(c)
    }

    fn validate(&self) -> PyResult<()> {
        self.core().map(|_| ())
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.core()?)
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemConfig(n_samples={}, snr={}, prior_present={}, oversample={}, seed={}, edge_margin={}, noiseless={})",
            self.n_samples,
            self.snr,
            self.prior_present,
            self.oversample,
            self.seed,
            self.edge_margin,
            if self.noiseless { "True" } else { "False" }
        )
    }
}

/// Posterior over target existence and delay for one snapshot.
#[pyclass(name = "PosteriorField")]
struct PyPosteriorField {
    inner: jde_core::PosteriorField,
}

#[pymethods]
impl PyPosteriorField {
    #[getter]
    fn p_present(&self) -> f64 {
        self.inner.p_present
    }

    #[getter]
    fn log_norm(&self) -> f64 {
        self.inner.log_norm
    }

    /// Delay grid points.
    #[getter]
    fn grid(&self) -> Vec<f64> {
        self.inner.grid.points()
    }

    /// Trapezoid weights of the grid.
    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.grid.weights()
    }

    /// Natural-log joint density rows `[v=0, v=1]`.
    #[getter]
    fn log_joint(&self) -> Vec<Vec<f64>> {
        self.inner.log_joint.to_vec()
    }

    /// `p(x | y, v)` on the grid.
    fn conditional_density(&self, present: bool) -> PyResult<Vec<f64>> {
        jde_core::estimator_posterior(&self.inner, present).map_err(py_err)
    }

    /// Entropy breakdown plus entropy errors and deviations, in bits.
    fn entropy<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let b = jde_core::snapshot_entropy(&self.inner).map_err(py_err)?;
        let e = jde_core::entropy_error_deviation(&b);
        let dict = to_py(py, &b)?.cast_into::<PyDict>()?;
        dict.update(to_py(py, &e)?.cast_into::<PyDict>()?.as_mapping())?;
        Ok(dict.into_any())
    }

    /// Apply a decision rule; `seed` drives the SAP and cascaded draws.
    #[pyo3(signature = (rule="sap", seed=0))]
    fn decide<'py>(&self, py: Python<'py>, rule: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let rule: Rule = rule.parse::<Rule>().map_err(PyValueError::new_err)?;
        let d = match rule {
            Rule::Map => jde_core::map_decide(&self.inner),
            Rule::Sap => jde_core::sap_decide(&self.inner, &mut substream(seed, 0, Purpose::Sap)),
            Rule::Cascaded => jde_core::cascaded_decide(&self.inner, &mut substream(seed, 0, Purpose::Cascaded)),
        };
        to_py(py, &d)
    }
}

#[pyfunction]
fn sinc(x: f64) -> f64 {
    jde_core::sinc(x)
}

#[pyfunction]
fn log_i0(z: f64) -> PyResult<f64> {
    jde_core::log_i0(z).map_err(py_err)
}

#[pyfunction]
fn discrete_entropy(p: f64) -> PyResult<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PyValueError::new_err(format!("probability {p} outside [0, 1]")));
    }
    Ok(jde_core::discrete_entropy(p))
}

#[pyfunction]
#[pyo3(signature = (density, n_samples, oversample))]
fn differential_entropy(density: Vec<f64>, n_samples: usize, oversample: usize) -> PyResult<f64> {
    let grid = jde_core::DelayGrid::new(n_samples, oversample).map_err(py_err)?;
    jde_core::differential_entropy(&density, &grid).map_err(py_err)
}

#[pyfunction]
fn entropy_number(h: f64) -> f64 {
    jde_core::entropy_number(h)
}

/// Synthesize one snapshot; returns `(samples, phase)`.
#[pyfunction]
#[pyo3(signature = (config, present, delay, seed=None))]
fn synthesize_snapshot(
    config: &PySystemConfig,
    present: bool,
    delay: f64,
    seed: Option<u64>,
) -> PyResult<(Vec<Complex64>, f64)> {
    let c = config.core()?;
    let mut rng = substream(seed.unwrap_or(c.seed), 0, Purpose::Channel);
    let s = jde_core::synthesize_snapshot(&c, JointTargetParameter::new(present, delay), &mut rng).map_err(py_err)?;
    Ok((s.samples, s.phase))
}

/// Posterior field for the given complex samples.
#[pyfunction]
fn compute_posterior(config: &PySystemConfig, samples: Vec<Complex64>) -> PyResult<PyPosteriorField> {
    let c = config.core()?;
    let engine = PosteriorEngine::new(&c).map_err(py_err)?;
    let snapshot = jde_core::Snapshot { truth: JointTargetParameter::new(false, 0.0), phase: 0.0, samples };
    Ok(PyPosteriorField { inner: engine.posterior(&snapshot).map_err(py_err)? })
}

#[pyfunction]
#[pyo3(signature = (config, n_mc, seed=None))]
fn theoretical_info<'py>(
    py: Python<'py>,
    config: &PySystemConfig,
    n_mc: usize,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = config.core()?;
    let r = py.detach(|| jde_core::theoretical_info(&c, n_mc, seed.unwrap_or(c.seed))).map_err(py_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (config, m, rules=None, checkpoints=None))]
fn run_campaign<'py>(
    py: Python<'py>,
    config: &PySystemConfig,
    m: usize,
    rules: Option<Vec<String>>,
    checkpoints: Option<Vec<usize>>,
) -> PyResult<Bound<'py, PyAny>> {
    let c = config.core()?;
    let rules = parse_rules(rules)?;
    let checkpoints = checkpoints.unwrap_or_default();
    let r = py.detach(|| jde_core::run_campaign(&c, m, &rules, &checkpoints)).map_err(py_err)?;
    to_py(py, &r)
}

#[pyfunction]
fn verify_joint_theorem<'py>(py: Python<'py>, config: &PySystemConfig, m: usize) -> PyResult<Bound<'py, PyAny>> {
    let c = config.core()?;
    let v = py.detach(|| jde_core::verify_joint_theorem(&c, m)).map_err(py_err)?;
    to_py(py, &v)
}

#[pyfunction]
fn verify_cascaded_theorem<'py>(py: Python<'py>, config: &PySystemConfig, m: usize) -> PyResult<Bound<'py, PyAny>> {
    let c = config.core()?;
    let v = py.detach(|| jde_core::verify_cascaded_theorem(&c, m)).map_err(py_err)?;
    to_py(py, &v)
}

/// SNR sweep; returns the CSV text the `jde sweep` command would write.
#[pyfunction]
#[pyo3(signature = (config, snr_db, m, rules=None))]
fn snr_sweep_csv(
    config: &PySystemConfig,
    snr_db: Vec<f64>,
    m: usize,
    rules: Option<Vec<String>>,
    py: Python<'_>,
) -> PyResult<String> {
    let c = config.core()?;
    let rules = match rules {
        Some(_) => parse_rules(rules)?,
        None => vec![Rule::Sap, Rule::Cascaded],
    };
    let runs = py.detach(|| harness::snr_sweep_with(&c, &snr_db, m, &rules, &[m], None)).map_err(py_err)?;
    let bytes = jde_core::cli::output::csv_bytes(&jde_core::cli::output::rows(&runs));
    Ok(String::from_utf8(bytes).expect("CSV is ASCII"))
}

#[pyfunction]
fn default_config() -> PySystemConfig {
    PySystemConfig::from_core(jde_core::SystemConfig::default())
}

#[pymodule]
fn radar_jde(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyPosteriorField>()?;
    m.add_function(wrap_pyfunction!(sinc, m)?)?;
    m.add_function(wrap_pyfunction!(log_i0, m)?)?;
    m.add_function(wrap_pyfunction!(discrete_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(differential_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_number, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_snapshot, m)?)?;
    m.add_function(wrap_pyfunction!(compute_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_info, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(verify_joint_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(verify_cascaded_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(snr_sweep_csv, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
