//! Python bindings. Matrices come back as nested lists of `complex`;
//! reports come back as plain dicts.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use swiptcast::channel::{self, ChannelRealization, Purpose, Role};
use swiptcast::hermitian::HermitianMatrix;
use swiptcast::power::{self, BeamformingSolution, Scheme};
use swiptcast::{chance, eval, harness, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn rows(m: &HermitianMatrix) -> Vec<Vec<Complex64>> {
    m.rows()
}

/// Scenario parameters in linear units.
#[pyclass(name = "ScenarioConfig", module = "swiptcast", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: channel::ScenarioConfig,
}

#[pymethods]
impl PyConfig {
    /// Default scenario, optionally overridden by TOML text in the config
    /// file format.
    #[new]
    #[pyo3(signature = (toml = None))]
    fn new(toml: Option<&str>) -> PyResult<Self> {
        let inner = match toml {
            Some(text) => harness::parse_config(text, "<string>").map_err(py_err)?,
            None => channel::ScenarioConfig::default(),
        };
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyConfig {
            inner: harness::load_config(&path).map_err(py_err)?,
        })
    }

    #[getter]
    fn n_antennas(&self) -> usize {
        self.inner.n_antennas
    }

    #[getter]
    fn n_premium(&self) -> usize {
        self.inner.n_premium
    }

    #[getter]
    fn n_basic(&self) -> usize {
        self.inner.n_basic
    }

    #[getter]
    fn n_idle(&self) -> usize {
        self.inner.n_idle
    }

    #[getter]
    fn n_layers(&self) -> usize {
        self.inner.n_layers
    }

    #[getter]
    fn sinr_req(&self) -> Vec<f64> {
        self.inner.sinr_req.clone()
    }

    #[getter]
    fn noise_power(&self) -> f64 {
        self.inner.noise_power
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "ScenarioConfig(n_antennas={}, premium={}, basic={}, idle={}, layers={}, kappa={})",
            c.n_antennas, c.n_premium, c.n_basic, c.n_idle, c.n_layers, c.kappa
        )
    }
}

/// One channel realization.
#[pyclass(name = "Realization", module = "swiptcast", from_py_object)]
#[derive(Clone)]
struct PyRealization {
    inner: ChannelRealization,
}

#[pymethods]
impl PyRealization {
    #[getter]
    fn trial_index(&self) -> u64 {
        self.inner.trial_index
    }

    /// Role names, one per receiver.
    #[getter]
    fn roles(&self) -> Vec<&'static str> {
        self.inner
            .receivers
            .iter()
            .map(|r| match r.role {
                Role::Premium => "premium",
                Role::Basic => "basic",
                Role::Idle => "idle",
            })
            .collect()
    }

    #[getter]
    fn distances(&self) -> Vec<f64> {
        self.inner.receivers.iter().map(|r| r.distance).collect()
    }

    #[getter]
    fn channels(&self) -> Vec<Vec<Complex64>> {
        self.inner
            .receivers
            .iter()
            .map(|r| r.channel.entries().to_vec())
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.receivers.len()
    }
}

/// Covariances and beam vectors produced by one scheme.
#[pyclass(name = "Solution", module = "swiptcast", from_py_object)]
#[derive(Clone)]
struct PySolution {
    inner: BeamformingSolution,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn scheme(&self) -> &'static str {
        self.inner.scheme.name()
    }

    /// Watts.
    #[getter]
    fn total_power(&self) -> f64 {
        self.inner.total_power
    }

    #[getter]
    fn total_power_dbm(&self) -> f64 {
        channel::watts_to_dbm(self.inner.total_power)
    }

    #[getter]
    fn ranks(&self) -> Vec<usize> {
        self.inner.ranks.clone()
    }

    #[getter]
    fn w_layers(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.inner.w_layers.iter().map(rows).collect()
    }

    #[getter]
    fn w_energy(&self) -> Vec<Vec<Complex64>> {
        rows(&self.inner.w_energy)
    }

    #[getter]
    fn beam_vectors(&self) -> Option<Vec<Vec<Complex64>>> {
        self.inner
            .beam_vectors
            .as_ref()
            .map(|vs| vs.iter().map(|v| v.entries().to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Solution(scheme={}, total_power={:.6e} W, ranks={:?})",
            self.inner.scheme, self.inner.total_power, self.inner.ranks
        )
    }
}

#[pyfunction]
fn generate_scenario(config: &PyConfig, trial: u64) -> PyResult<PyRealization> {
    Ok(PyRealization {
        inner: channel::generate_scenario(&config.inner, trial).map_err(py_err)?,
    })
}

/// Solves one realization with `scheme` in sdr, scheme1, scheme2, baseline.
#[pyfunction]
#[pyo3(signature = (config, realization, scheme = "sdr"))]
fn solve(config: &PyConfig, realization: &PyRealization, scheme: &str) -> PyResult<PySolution> {
    let scheme: Scheme = scheme.parse().map_err(py_err)?;
    let (cfg, real) = (&config.inner, &realization.inner);
    let inner = match scheme {
        Scheme::Baseline => power::solve_baseline_mrt(cfg, real),
        other => power::solve_sdr(cfg, real).and_then(|(sdr, _)| match other {
            Scheme::Scheme1 => power::extract_scheme1(cfg, real, &sdr),
            Scheme::Scheme2 => power::extract_scheme2(cfg, real, &sdr, cfg.n_rand),
            _ => Ok(sdr),
        }),
    }
    .map_err(py_err)?;
    Ok(PySolution { inner })
}

/// Rank diagnostics of the relaxation, as a dict.
#[pyfunction]
fn rank_report<'py>(
    py: Python<'py>,
    config: &PyConfig,
    realization: &PyRealization,
) -> PyResult<Bound<'py, PyAny>> {
    let (_, report) = power::solve_sdr(&config.inner, &realization.inner).map_err(py_err)?;
    to_dict(py, &report)
}

/// Independent verification with `n_samples` eavesdropper draws.
#[pyfunction]
#[pyo3(signature = (solution, config, realization, n_samples = 10_000))]
fn evaluate<'py>(
    py: Python<'py>,
    solution: &PySolution,
    config: &PyConfig,
    realization: &PyRealization,
    n_samples: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = &config.inner;
    let real = &realization.inner;
    let mut rng = channel::trial_rng(cfg.seed, real.trial_index, Purpose::Verification);
    let report = eval::evaluate(&solution.inner, cfg, real, n_samples, &mut rng).map_err(py_err)?;
    let out = to_dict(py, &report)?;
    out.cast::<PyDict>()?
        .set_item("chance_ok", harness::run::chance_passes(cfg, &report))?;
    Ok(out)
}

#[pyfunction]
fn chi2_inv(p: f64, dof: usize) -> PyResult<f64> {
    chance::chi2_inv(p, dof).map_err(py_err)
}

#[pyfunction]
fn chi2_cdf(x: f64, dof: usize) -> PyResult<f64> {
    chance::chi2_cdf(x, dof).map_err(py_err)
}

/// Largest admissible `λ_max(Q)` for the configured eavesdropper model.
#[pyfunction]
fn safe_threshold(config: &PyConfig) -> PyResult<f64> {
    chance::safe_threshold(&config.inner.eavesdropper_spec()).map_err(py_err)
}

/// `(name, passed, detail)` for each analytic self-check.
#[pyfunction]
fn selftest() -> Vec<(String, bool, String)> {
    harness::selftest()
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
#[pyo3(name = "swiptcast")]
fn swiptcast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyRealization>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(generate_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(rank_report, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_inv, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(safe_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
