//! Python module `resched`. Structured values cross the boundary as JSON and
//! come back as plain dicts and lists.

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use resched_core::engine::{run_until_stable, FulfillmentMode};
use resched_core::metrics::{compute_kpis, KpiReport};
use resched_core::model::{DisruptionEvent, World};
use resched_core::scenario::{generate_scenario, load_scenario, GeneratorParams, LoadedScenario};
use resched_core::solver::{
    solve_all_or_nothing, solve_capacity, solve_consolidation as consolidate, solve_partial, AllocationProblem, Mode,
    ReductionProblem, WeightConfig,
};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = resched_core::canonical_json(value);
    py.import("json")?.call_method1("loads", (text,))
}

/// Accepts a JSON string or any JSON-serializable Python object.
fn from_py<T: serde::de::DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    serde_json::from_str(&text).map_err(value_error)
}

#[pyclass(frozen, module = "resched")]
struct Scenario {
    inner: LoadedScenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        load_scenario(text.as_bytes()).map(|inner| Scenario { inner }).map_err(value_error)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        resched_core::scenario::load_scenario_file(path).map(|inner| Scenario { inner }).map_err(value_error)
    }

    /// Synthetic network; keyword arguments override generator defaults.
    #[staticmethod]
    #[pyo3(signature = (**params))]
    fn generate(params: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let params: GeneratorParams = match params {
            Some(p) => from_py(p.as_any())?,
            None => GeneratorParams::default(),
        };
        let file = generate_scenario(&params).map_err(value_error)?;
        Self::from_json(&file.to_canonical_json())
    }

    #[staticmethod]
    fn fig2() -> Self {
        Scenario { inner: resched_core::scenario::fig2() }
    }

    fn to_json(&self) -> String {
        self.inner.file.to_canonical_json()
    }

    #[getter]
    fn horizon_days(&self) -> u32 {
        self.inner.world.horizon_days()
    }

    #[getter]
    fn days_on_hand(&self) -> f64 {
        self.inner.file.days_on_hand()
    }

    #[getter]
    fn materials(&self) -> Vec<String> {
        self.inner.world.materials().keys().cloned().collect()
    }

    fn production(&self, material: &str) -> PyResult<Vec<u64>> {
        production(&self.inner.world, material)
    }

    /// Runs the given events (strings like "stoppage:CF1:3:2" or event
    /// dicts) on top of the scenario's own events until the schedule settles.
    #[pyo3(signature = (events = None, mode = None, max_iterations = None, inventory_reduction = None))]
    fn run(
        &self,
        py: Python<'_>,
        events: Option<Vec<Bound<'_, PyAny>>>,
        mode: Option<&str>,
        max_iterations: Option<u32>,
        inventory_reduction: Option<bool>,
    ) -> PyResult<RunResult> {
        let mut all = self.inner.events.clone();
        for e in events.unwrap_or_default() {
            all.push(match e.extract::<String>() {
                Ok(s) => s.parse::<DisruptionEvent>().map_err(value_error)?,
                Err(_) => from_py(&e)?,
            });
        }
        let mut config = self.inner.config.clone();
        if let Some(m) = mode {
            config.fulfillment_mode = match m {
                "partial" => FulfillmentMode::Partial,
                "all_or_nothing" | "all-or-nothing" => FulfillmentMode::AllOrNothing,
                other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
            };
        }
        if let Some(n) = max_iterations {
            config.max_iterations = n;
        }
        if let Some(r) = inventory_reduction {
            config.inventory_reduction_enabled = r;
        }
        let baseline = &self.inner.world;
        let result = py.detach(|| run_until_stable(baseline, &all, &config)).map_err(value_error)?;
        let kpis = compute_kpis(baseline, &result).map_err(value_error)?;
        Ok(RunResult { inner: result, kpis })
    }
}

fn production(world: &World, id: &str) -> PyResult<Vec<u64>> {
    world.production(id).map(<[u64]>::to_vec).map_err(|e| PyKeyError::new_err(e.to_string()))
}

#[pyclass(frozen, module = "resched")]
struct RunResult {
    inner: resched_core::engine::RunResult,
    kpis: KpiReport,
}

#[pymethods]
impl RunResult {
    #[getter]
    fn iterations(&self) -> u32 {
        self.inner.iterations_used
    }

    #[getter]
    fn stabilized(&self) -> bool {
        self.inner.stabilized
    }

    fn kpis<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.kpis)
    }

    fn affected<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.affected)
    }

    fn trace_jsonl(&self) -> String {
        self.inner.trace_jsonl()
    }

    fn world_json(&self) -> String {
        self.inner.world.canonical_json()
    }

    fn production(&self, material: &str) -> PyResult<Vec<u64>> {
        production(&self.inner.world, material)
    }

    fn deliveries(&self, order: &str) -> PyResult<Vec<u64>> {
        self.inner
            .world
            .deliveries()
            .get(order)
            .cloned()
            .ok_or_else(|| PyKeyError::new_err(format!("unknown order `{order}`")))
    }
}

/// Solves one allocation problem. The problem's own mode is used unless
/// `mode` is given.
#[pyfunction]
#[pyo3(signature = (problem, weights = None, mode = None))]
fn solve<'py>(
    py: Python<'py>,
    problem: &Bound<'py, PyAny>,
    weights: Option<&Bound<'py, PyAny>>,
    mode: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut problem: AllocationProblem = from_py(problem)?;
    let weights: WeightConfig = weights.map(from_py).transpose()?.unwrap_or_default();
    if let Some(m) = mode {
        problem.mode = match m {
            "partial" => Mode::Partial,
            "all_or_nothing" | "all-or-nothing" => Mode::AllOrNothing,
            "capacity" => Mode::Capacity,
            other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
        };
    }
    let allocation = match problem.mode {
        Mode::Partial => solve_partial(&problem, &weights),
        Mode::AllOrNothing => solve_all_or_nothing(&problem, &weights),
        Mode::Capacity => solve_capacity(&problem),
    }
    .map_err(value_error)?;
    to_py(py, &allocation)
}

#[pyfunction]
fn solve_consolidation<'py>(py: Python<'py>, problem: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let problem: ReductionProblem = from_py(problem)?;
    to_py(py, &consolidate(&problem).map_err(value_error)?)
}

#[pymodule]
fn resched(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_consolidation, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
