//! Python bindings for the dispersive lab.
//!
//! Fields cross the boundary as flat lists of real samples in row-major
//! order, paired with a [`PyGrid`].

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use dispersive_core::analysis::{decay_fit as core_fit, norm as core_norm, NormSpec};
use dispersive_core::dynamics::{evolve as core_evolve, EquationSpec, EvolveOptions, Schedule, Sign};
use dispersive_core::lab::{apply_overrides, preset, run_scenario as core_run, ScenarioKind};
use dispersive_core::spectral::{linear_propagator, make_grid, Family, Field, Grid};
use dispersive_core::LabError;

fn py_err(e: LabError) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Periodic grid `x_j = -L/2 + j dx` per axis.
#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: Arc<Grid>,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(n: Vec<usize>, lengths: Vec<f64>) -> PyResult<Self> {
        Ok(PyGrid {
            inner: make_grid(&n, &lengths).map_err(py_err)?,
        })
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.shape().to_vec()
    }

    #[getter]
    fn lengths(&self) -> Vec<f64> {
        self.inner.lengths().to_vec()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn coords(&self, axis: usize) -> PyResult<Vec<f64>> {
        if axis >= self.inner.dim() {
            return Err(PyValueError::new_err(format!("axis {axis} out of range")));
        }
        Ok(self.inner.coords(axis))
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={:?}, lengths={:?})", self.inner.shape(), self.inner.lengths())
    }
}

impl PyGrid {
    fn field(&self, values: &[f64]) -> PyResult<Field> {
        Field::from_real(&self.inner, values).map_err(py_err)
    }
}

fn parse_norm(kind: &str, p: f64, q: Option<f64>) -> PyResult<NormSpec> {
    match kind {
        "lebesgue" => Ok(NormSpec::lebesgue(p)),
        "sup" => Ok(NormSpec::sup()),
        "lorentz" => Ok(NormSpec::lorentz(p, q.unwrap_or(p))),
        other => Err(PyValueError::new_err(format!(
            "unknown norm '{other}' (lebesgue, sup, lorentz)"
        ))),
    }
}

fn parse_sign(sign: &str) -> PyResult<Sign> {
    match sign {
        "focusing" => Ok(Sign::Focusing),
        "defocusing" => Ok(Sign::Defocusing),
        other => Err(PyValueError::new_err(format!("unknown sign '{other}'"))),
    }
}

/// Lebesgue, sup or Lorentz norm of real samples on `grid`.
#[pyfunction]
#[pyo3(signature = (grid, values, kind = "lebesgue", p = 2.0, q = None))]
fn norm(grid: &PyGrid, values: Vec<f64>, kind: &str, p: f64, q: Option<f64>) -> PyResult<f64> {
    let f = grid.field(&values)?;
    core_norm(&f, &parse_norm(kind, p, q)?).map_err(py_err)
}

/// Exact linear flow: Airy in one dimension, ZK otherwise.
#[pyfunction]
fn propagate(grid: &PyGrid, values: Vec<f64>, t: f64) -> PyResult<Vec<f64>> {
    let f = grid.field(&values)?;
    let family = if grid.inner.dim() == 1 { Family::Airy } else { Family::Zk };
    Ok(linear_propagator(&f, t, family).map_err(py_err)?.real_values())
}

/// Evolves gKdV (1D) or gZK (2D+) and returns the norm history as a dict.
#[pyfunction]
#[pyo3(signature = (grid, values, k, horizon, sign = "defocusing", interval = None, dt = None, linear = false, guard = None))]
#[allow(clippy::too_many_arguments)]
fn evolve<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    values: Vec<f64>,
    k: u32,
    horizon: f64,
    sign: &str,
    interval: Option<f64>,
    dt: Option<f64>,
    linear: bool,
    guard: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let u0 = grid.field(&values)?;
    let sign = parse_sign(sign)?;
    let dim = grid.inner.dim();
    let mut spec = if dim == 1 { EquationSpec::gkdv(k, sign) } else { EquationSpec::gzk(dim, k, sign) };
    if linear {
        spec = spec.linear();
    }
    let mut opts = EvolveOptions::new(horizon);
    opts.dt = dt;
    if let Some(interval) = interval {
        opts.schedule = Schedule::Uniform { interval };
    }
    if let Some(threshold) = guard {
        opts.guard.threshold = threshold;
    }
    let traj = py.detach(|| core_evolve(&u0, &spec, &opts)).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("t", traj.times())?;
    out.set_item("l2", traj.records.iter().map(|r| r.l2).collect::<Vec<_>>())?;
    out.set_item("linf", traj.records.iter().map(|r| r.linf).collect::<Vec<_>>())?;
    out.set_item("mass", traj.records.iter().map(|r| r.mass).collect::<Vec<_>>())?;
    out.set_item("energy", traj.records.iter().map(|r| r.energy).collect::<Vec<_>>())?;
    out.set_item("dt", traj.dt)?;
    out.set_item("steps", traj.steps)?;
    out.set_item("halvings", traj.halvings)?;
    out.set_item("wrap_time", traj.wrap_time)?;
    let last = traj.stored.last().map(|(_, f)| f.real_values());
    out.set_item("final", last)?;
    Ok(out)
}

/// Least-squares power law `value ~ A t^beta` over `[t0, t1]`.
#[pyfunction]
#[pyo3(signature = (times, values, t0, t1, weight = 0.0))]
fn decay_fit<'py>(
    py: Python<'py>,
    times: Vec<f64>,
    values: Vec<f64>,
    t0: f64,
    t1: f64,
    weight: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let fit = core_fit(&times, &values, (t0, t1), weight).map_err(py_err)?;
    let out = PyDict::new(py);
    out.set_item("exponent", fit.exponent)?;
    out.set_item("amplitude", fit.amplitude)?;
    out.set_item("stderr", fit.stderr)?;
    out.set_item("r_squared", fit.r_squared)?;
    out.set_item("weighted_sup", fit.weighted_sup)?;
    out.set_item("samples", fit.samples)?;
    Ok(out)
}

/// Preset configuration of a scenario as a JSON string.
#[pyfunction]
fn preset_config(name: &str) -> PyResult<String> {
    let kind = ScenarioKind::parse(name).map_err(py_err)?;
    serde_json::to_string_pretty(&preset(kind)).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Runs a catalog scenario into `out` and returns the manifest as JSON.
#[pyfunction]
#[pyo3(signature = (name, out, overrides = Vec::new(), long_running = false))]
fn run_scenario(
    py: Python<'_>,
    name: &str,
    out: PathBuf,
    overrides: Vec<String>,
    long_running: bool,
) -> PyResult<String> {
    let kind = ScenarioKind::parse(name).map_err(py_err)?;
    let mut cfg = apply_overrides(&preset(kind), &overrides).map_err(py_err)?;
    cfg.out = Some(out);
    cfg.long_running = long_running;
    let manifest = py.detach(|| core_run(&cfg)).map_err(py_err)?;
    serde_json::to_string_pretty(&manifest).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn dispersive(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(norm, m)?)?;
    m.add_function(wrap_pyfunction!(propagate, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(decay_fit, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
