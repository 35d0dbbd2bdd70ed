//! Python bindings: scenarios, MCS tables, single runs, paired campaigns,
//! coverage maps and quantile comparison.

use std::path::PathBuf;

use cfsim_core::engine::with_workers;
use cfsim_core::{
    compare_modes, coverage_map, quantile as core_quantile, run_campaign, run_simulation, McsTable, RunConfig,
    Scenario, ServingMode,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<ServingMode> {
    mode.parse::<ServingMode>().map_err(value_err)
}

/// Deployment, band plan, channel and scheduler parameters.
#[pyclass(name = "Scenario", module = "cfsim", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    /// Reference deployment at desk scale.
    #[new]
    fn new() -> Self {
        Self { inner: Scenario::default() }
    }

    #[staticmethod]
    fn paper_scale() -> Self {
        Self {
            inner: Scenario::paper_scale(),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: Scenario::load(path).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Scenario::from_toml_str(text).map_err(value_err)?,
        })
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(value_err)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(value_err)
    }

    #[getter]
    fn num_bs(&self) -> usize {
        self.inner.num_bs()
    }

    #[getter]
    fn num_users(&self) -> usize {
        self.inner.num_users
    }

    #[setter]
    fn set_num_users(&mut self, v: usize) {
        self.inner.num_users = v;
    }

    #[getter]
    fn num_slots(&self) -> usize {
        self.inner.num_slots
    }

    #[setter]
    fn set_num_slots(&mut self, v: usize) {
        self.inner.num_slots = v;
    }

    #[getter]
    fn num_runs(&self) -> usize {
        self.inner.num_runs
    }

    #[setter]
    fn set_num_runs(&mut self, v: usize) {
        self.inner.num_runs = v;
    }

    #[getter]
    fn serving_mode(&self) -> String {
        self.inner.serving_mode.label()
    }

    #[setter]
    fn set_serving_mode(&mut self, mode: &str) -> PyResult<()> {
        self.inner.serving_mode = parse_mode(mode)?;
        Ok(())
    }

    #[getter]
    fn correlation_threshold(&self) -> f64 {
        self.inner.scheduler.correlation_threshold
    }

    #[setter]
    fn set_correlation_threshold(&mut self, v: f64) {
        self.inner.scheduler.correlation_threshold = v;
    }

    #[getter]
    fn csi_delay_slots(&self) -> usize {
        self.inner.scheduler.csi_delay_slots
    }

    #[setter]
    fn set_csi_delay_slots(&mut self, v: usize) {
        self.inner.scheduler.csi_delay_slots = v;
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(num_bs={}, num_users={}, num_slots={}, num_runs={}, serving_mode='{}')",
            self.inner.num_bs(),
            self.inner.num_users,
            self.inner.num_slots,
            self.inner.num_runs,
            self.inner.serving_mode.label()
        )
    }
}

/// SINR thresholds and spectral efficiencies of the 15 MCS levels.
#[pyclass(name = "McsTable", module = "cfsim", from_py_object)]
#[derive(Clone)]
struct PyMcsTable {
    inner: McsTable,
}

#[pymethods]
impl PyMcsTable {
    #[new]
    fn new() -> Self {
        Self {
            inner: McsTable::default(),
        }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: McsTable::load(path).map_err(value_err)?,
        })
    }

    /// Highest index whose threshold is at or below `sinr_db`, or None.
    fn select_mcs(&self, sinr_db: f64) -> Option<usize> {
        self.inner.select_mcs(sinr_db)
    }

    fn transport_outcome(&self, chosen: usize, realized_sinr_db: f64) -> PyResult<f64> {
        if !(1..=self.inner.entries().len()).contains(&chosen) {
            return Err(value_err(format!("MCS index {chosen} outside 1..={}", self.inner.entries().len())));
        }
        Ok(self.inner.transport_outcome(chosen, realized_sinr_db))
    }

    /// `(index, threshold_db, efficiency)` rows.
    fn entries(&self) -> Vec<(usize, f64, f64)> {
        self.inner
            .entries()
            .iter()
            .map(|e| (e.index, e.threshold_db, e.efficiency))
            .collect()
    }
}

fn table(mcs: Option<PyMcsTable>) -> McsTable {
    mcs.map_or_else(McsTable::default, |m| m.inner)
}

/// One run in one serving mode. Returns a dict with per-user throughput and
/// link counters.
#[pyfunction]
#[pyo3(signature = (scenario, mode = "uc", seed = 1, run_index = 0, mcs = None))]
fn run<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    mode: &str,
    seed: u64,
    run_index: usize,
    mcs: Option<PyMcsTable>,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = parse_mode(mode)?;
    let mut s = scenario.inner.clone();
    s.serving_mode = mode;
    s.validate().map_err(value_err)?;
    let mcs = table(mcs);
    let config = RunConfig {
        run_index,
        rng_seed: seed,
        num_slots: s.num_slots,
        mode,
    };
    let m = py.detach(|| run_simulation(&s, &mcs, &config)).map_err(runtime_err)?;
    let d = PyDict::new(py);
    d.set_item("mode", mode.label())?;
    d.set_item("user_throughput_bps", m.user_throughput_bps)?;
    d.set_item("delivered_bits", m.delivered_bits)?;
    d.set_item("transmissions", m.transmissions)?;
    d.set_item("block_errors", m.block_errors)?;
    d.set_item("scheduled_layers", m.scheduled_layers)?;
    Ok(d)
}

/// Paired campaign; returns `{mode label: pooled per-user throughputs}`.
#[pyfunction]
#[pyo3(signature = (scenario, modes = vec!["nc".to_string(), "uc".to_string()], seed = 1, runs = None, mcs = None, workers = 0))]
fn campaign<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    modes: Vec<String>,
    seed: u64,
    runs: Option<usize>,
    mcs: Option<PyMcsTable>,
    workers: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let modes: Vec<ServingMode> = modes.iter().map(|m| parse_mode(m)).collect::<PyResult<_>>()?;
    let s = scenario.inner.clone();
    s.validate().map_err(value_err)?;
    let mcs = table(mcs);
    let runs = runs.unwrap_or(s.num_runs);
    let c = py
        .detach(|| with_workers(workers, || run_campaign(&s, &mcs, seed, runs, &modes)))
        .map_err(runtime_err)?;
    let d = PyDict::new(py);
    for m in c.modes {
        d.set_item(m.mode.label(), m.samples)?;
    }
    Ok(d)
}

/// Coverage map rows `(x_m, y_m, best_single_bs_dbm, user_centric_dbm)`.
#[pyfunction]
#[pyo3(signature = (scenario, spacing = 5.0, seed = 1))]
fn coverage(py: Python<'_>, scenario: &PyScenario, spacing: f64, seed: u64) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(value_err(format!("spacing must be positive, got {spacing}")));
    }
    let s = scenario.inner.clone();
    let grid = py.detach(|| coverage_map(&s, spacing, seed));
    Ok(grid
        .points
        .iter()
        .map(|p| (p.position.x, p.position.y, p.best_single_bs_dbm(), p.user_centric_dbm()))
        .collect())
}

/// Linear-interpolation quantile.
#[pyfunction]
fn quantile(samples: Vec<f64>, q: f64) -> PyResult<f64> {
    core_quantile(&samples, q).map_err(value_err)
}

/// Quantile ratios of `candidate` over `baseline` with per-mode q10/q50/q90
/// and spreads.
#[pyfunction]
fn compare<'py>(py: Python<'py>, baseline: Vec<f64>, candidate: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = compare_modes(
        (ServingMode::NetworkCentric, &baseline),
        (ServingMode::UserCentric, &candidate),
    )
    .map_err(value_err)?;
    let d = PyDict::new(py);
    for (key, m) in [("baseline", &r.baseline), ("candidate", &r.candidate)] {
        let inner = PyDict::new(py);
        inner.set_item("q10_bps", m.q10_bps)?;
        inner.set_item("q50_bps", m.q50_bps)?;
        inner.set_item("q90_bps", m.q90_bps)?;
        inner.set_item("spread_bps", m.spread_bps)?;
        inner.set_item("num_samples", m.num_samples)?;
        d.set_item(key, inner)?;
    }
    d.set_item("q10_ratio", r.q10_ratio)?;
    d.set_item("q50_ratio", r.q50_ratio)?;
    d.set_item("q90_ratio", r.q90_ratio)?;
    d.set_item("spread_ratio", r.spread_ratio)?;
    Ok(d)
}

#[pymodule]
fn cfsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyMcsTable>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(campaign, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(quantile, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    Ok(())
}
