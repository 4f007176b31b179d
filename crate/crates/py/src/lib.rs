//! Python module `levy_epidemic`: models, simulation, stability verdicts and
//! the Monte Carlo and exit-probability estimators.
//!
//! Structured results (summaries, verdicts) are returned as plain Python
//! dictionaries with the same keys as the CLI's JSON output.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use epidemic::analysis::{self, ExitProblem, TestFunction};
use epidemic::integrator::{simulate_path, BoundaryPolicy, SimConfig};
use epidemic::kernel::{self, JumpFunction, MarkDistribution, RngStream};
use epidemic::models::{self, SimplexState, SirsParams, SisParams};
use epidemic::{cli, stability, Error};

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::NumericalFailure { .. } => PyRuntimeError::new_err(err.to_string()),
        Error::Io(_) => PyOSError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Intensity measure `ν` and jump function `h`.
#[pyclass(name = "JumpSpec", module = "levy_epidemic", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyJumpSpec {
    inner: kernel::JumpSpec,
}

#[pymethods]
impl PyJumpSpec {
    /// No jumps.
    #[staticmethod]
    fn none() -> Self {
        Self { inner: kernel::JumpSpec::none() }
    }

    /// `ν(ℝ) = mass` with `h ≡ value`.
    #[staticmethod]
    fn constant(mass: f64, value: f64) -> PyResult<Self> {
        let inner = kernel::JumpSpec::constant(mass, value).map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Uniform marks on `[low, high]` and a piecewise-linear `h`.
    #[staticmethod]
    fn uniform(mass: f64, low: f64, high: f64, knots: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        let inner = kernel::JumpSpec::new(
            mass,
            MarkDistribution::Uniform { low, high },
            JumpFunction::PiecewiseLinear { knots, values },
        )
        .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn total_mass(&self) -> f64 {
        self.inner.total_mass()
    }

    /// `(∫h dν, ∫h² dν)`.
    fn integrals(&self) -> (f64, f64) {
        let ints = kernel::compute_jump_integrals(&self.inner);
        (ints.int_h, ints.int_h_sq)
    }
}

/// An SIS or SIRS model with its parameters.
#[pyclass(name = "Model", module = "levy_epidemic", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: models::Model,
}

fn jumps_or_none(jumps: Option<PyRef<'_, PyJumpSpec>>) -> kernel::JumpSpec {
    jumps.map_or_else(kernel::JumpSpec::none, |j| j.inner.clone())
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (beta, mu, lambda_, sigma, jumps=None))]
    fn sis(beta: f64, mu: f64, lambda_: f64, sigma: f64, jumps: Option<PyRef<'_, PyJumpSpec>>) -> PyResult<Self> {
        let p = SisParams::new(beta, mu, lambda_, sigma, jumps_or_none(jumps)).map_err(to_py_err)?;
        Ok(Self { inner: models::Model::Sis(p) })
    }

    #[staticmethod]
    #[pyo3(signature = (beta, lambda_, delta, sigma, jumps=None))]
    fn sirs(beta: f64, lambda_: f64, delta: f64, sigma: f64, jumps: Option<PyRef<'_, PyJumpSpec>>) -> PyResult<Self> {
        let p = SirsParams::new(beta, lambda_, delta, sigma, jumps_or_none(jumps)).map_err(to_py_err)?;
        Ok(Self { inner: models::Model::Sirs(p) })
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Stability verdict for the disease-free equilibrium.
    fn verdict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &stability::dfe_verdict(&self.inner).map_err(to_py_err)?)
    }

    /// Noise-free threshold: `μ + λ` (SIS) or `λ` (SIRS).
    fn deterministic_threshold(&self) -> f64 {
        stability::deterministic_threshold(&self.inner)
    }

    /// Fixed points of the noise-free system.
    fn equilibria<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &models::deterministic_equilibria(&self.inner))
    }

    fn __repr__(&self) -> String {
        format!("Model.{}(...)", self.inner.name())
    }
}

fn state(coords: &[f64]) -> PyResult<SimplexState> {
    SimplexState::from_slice(coords).map_err(to_py_err)
}

fn policy(name: &str) -> PyResult<BoundaryPolicy> {
    match name {
        "clamp" => Ok(BoundaryPolicy::Clamp),
        "reject_step" => Ok(BoundaryPolicy::RejectStep),
        other => Err(PyValueError::new_err(format!("unknown boundary policy {other:?}"))),
    }
}

/// Simulates one path. Returns `(times, states, jumped)`.
#[pyfunction]
#[pyo3(signature = (model, x0, t_end, dt=1e-3, seed=0, stream=0, record_stride=1, boundary_policy="clamp"))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    model: &PyModel,
    x0: Vec<f64>,
    t_end: f64,
    dt: f64,
    seed: u64,
    stream: u64,
    record_stride: usize,
    boundary_policy: &str,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, Vec<bool>)> {
    let x0 = state(&x0)?;
    let cfg = SimConfig::new(t_end, dt, seed)
        .with_stride(record_stride)
        .with_policy(policy(boundary_policy)?);
    let traj = py
        .detach(|| simulate_path(&model.inner, &x0, &cfg, &mut RngStream::new(seed, stream)))
        .map_err(to_py_err)?;
    let states = traj.states.iter().map(|s| s.coords().to_vec()).collect();
    Ok((traj.times, states, traj.jumped))
}

/// Fraction of paths with terminal `I` below `i_threshold`.
#[pyfunction]
#[pyo3(signature = (model, x0, t_end, n_paths, i_threshold, dt=1e-3, seed=0))]
#[allow(clippy::too_many_arguments)]
fn estimate_extinction<'py>(
    py: Python<'py>,
    model: &PyModel,
    x0: Vec<f64>,
    t_end: f64,
    n_paths: usize,
    i_threshold: f64,
    dt: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let x0 = state(&x0)?;
    let cfg = SimConfig::new(t_end, dt, seed);
    let s = py
        .detach(|| analysis::estimate_extinction(&model.inner, &x0, &cfg, n_paths, i_threshold))
        .map_err(to_py_err)?;
    to_py(py, &s)
}

/// First time `S ≥ 1 − epsilon`, censored at `t_end`.
#[pyfunction]
#[pyo3(signature = (model, x0, epsilon, t_end, n_paths, dt=1e-3, seed=0))]
#[allow(clippy::too_many_arguments)]
fn estimate_hitting_time<'py>(
    py: Python<'py>,
    model: &PyModel,
    x0: Vec<f64>,
    epsilon: f64,
    t_end: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let x0 = state(&x0)?;
    let cfg = SimConfig::new(t_end, dt, seed);
    let s = py
        .detach(|| analysis::estimate_hitting_time(&model.inner, &x0, epsilon, &cfg, n_paths))
        .map_err(to_py_err)?;
    to_py(py, &s)
}

/// Monte Carlo generator estimate against the closed form at state `x`.
///
/// SIS models use `g = 1 − S`; SIRS models use the quadratic Lyapunov
/// function with constants from the stability module, or `(1, 1, 1)` when no
/// feasible constants exist.
#[pyfunction]
#[pyo3(signature = (model, x, n_samples, dt_probe=1e-3, seed=0))]
fn generator_check<'py>(
    py: Python<'py>,
    model: &PyModel,
    x: Vec<f64>,
    n_samples: usize,
    dt_probe: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let x = state(&x)?;
    let test_fn = match &model.inner {
        models::Model::Sis(_) => TestFunction::SisG,
        models::Model::Sirs(p) => TestFunction::SirsF(stability::find_lyapunov_constants(p).unwrap_or(
            stability::LyapunovConstants { c1: 1.0, c2: 1.0, c3: 1.0, kappa: 0.0 },
        )),
    };
    let c = py
        .detach(|| analysis::dynkin_generator_check(&model.inner, &x, test_fn, dt_probe, n_samples, seed))
        .map_err(to_py_err)?;
    to_py(py, &c)
}

fn exit_problem(model: &PyModel, x1: f64, x2: f64, grid_n: usize) -> PyResult<ExitProblem> {
    match &model.inner {
        models::Model::Sis(p) => ExitProblem::new(x1, x2, grid_n, p.clone()).map_err(to_py_err),
        models::Model::Sirs(_) => Err(PyValueError::new_err("exit probabilities are defined for the SIS model")),
    }
}

/// Solves the exit-probability equation. Returns `(pi_up, grid, u)`.
#[pyfunction]
#[pyo3(signature = (model, x1, x2, x0, grid_n=1000))]
fn solve_exit_probability(
    py: Python<'_>,
    model: &PyModel,
    x1: f64,
    x2: f64,
    x0: f64,
    grid_n: usize,
) -> PyResult<(f64, Vec<f64>, Vec<f64>)> {
    let prob = exit_problem(model, x1, x2, grid_n)?;
    let sol = py.detach(|| analysis::solve_exit_probability(&prob, x0)).map_err(to_py_err)?;
    Ok((sol.pi_up, sol.grid, sol.u))
}

/// Monte Carlo frequency of leaving `(x1, x2)` at or above `x2`.
#[pyfunction]
#[pyo3(signature = (model, x1, x2, x0, n_paths, t_end=1000.0, dt=1e-3, seed=0))]
#[allow(clippy::too_many_arguments)]
fn mc_exit_probability<'py>(
    py: Python<'py>,
    model: &PyModel,
    x1: f64,
    x2: f64,
    x0: f64,
    n_paths: usize,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let prob = exit_problem(model, x1, x2, analysis::MIN_GRID_N)?;
    let cfg = SimConfig::new(t_end, dt, seed);
    let est = py
        .detach(|| analysis::mc_exit_probability(&prob, x0, &cfg, n_paths))
        .map_err(to_py_err)?;
    to_py(py, &est)
}

/// Writes the six built-in panels, `verdicts.csv` and `summary.json`.
#[pyfunction]
#[pyo3(signature = (out_dir, seed=None))]
fn reproduce_figures<'py>(py: Python<'py>, out_dir: PathBuf, seed: Option<u64>) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(|| cli::reproduce_figures(&out_dir, seed)).map_err(to_py_err)?;
    to_py(py, &report)
}

/// The six built-in parameter sets as `{name: (model, x0, seed)}`.
#[pyfunction]
fn panels(py: Python<'_>) -> PyResult<Bound<'_, pyo3::types::PyDict>> {
    let dict = pyo3::types::PyDict::new(py);
    for p in epidemic::panels::builtin_panels() {
        let model = Py::new(py, PyModel { inner: p.model })?;
        dict.set_item(p.name, (model, p.x0.coords().to_vec(), p.seed))?;
    }
    Ok(dict)
}

#[pymodule]
fn levy_epidemic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyJumpSpec>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_extinction, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_hitting_time, m)?)?;
    m.add_function(wrap_pyfunction!(generator_check, m)?)?;
    m.add_function(wrap_pyfunction!(solve_exit_probability, m)?)?;
    m.add_function(wrap_pyfunction!(mc_exit_probability, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_figures, m)?)?;
    m.add_function(wrap_pyfunction!(panels, m)?)?;
    Ok(())
}
