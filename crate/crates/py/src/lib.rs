//! Python bindings: configuration, traces, the station simulator, training and evaluation.

use std::path::PathBuf;
use std::sync::Arc;

use huca_core::config::RunConfig as CoreConfig;
use huca_core::evalkit::{self, BaselinePolicy, EvalSpec};
use huca_core::simenv::{self, Scenario};
use huca_core::traceio::{self, SyntheticProfile};
use huca_core::trainer;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(huca, HucaError, PyException);

fn py_err(e: huca_core::Error) -> PyErr {
    HucaError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_scenario(s: &str) -> PyResult<Scenario> {
    s.parse().map_err(PyValueError::new_err)
}

/// Flat run configuration; keys match the `key = value` file format.
#[pyclass(module = "huca", from_py_object)]
#[derive(Clone)]
pub struct RunConfig {
    inner: CoreConfig,
}

#[pymethods]
impl RunConfig {
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut inner = CoreConfig::new();
        if let Some(kw) = overrides {
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                inner.set(&key, &v.str()?.to_string()).map_err(py_err)?;
            }
        }
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: CoreConfig::from_text(text).map_err(py_err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        self.inner.set(key, &value.str()?.to_string()).map_err(py_err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.train.seed
    }

    #[getter]
    fn n_piles(&self) -> usize {
        self.inner.station.n_piles
    }

    #[getter]
    fn episodes(&self) -> usize {
        self.inner.train.episodes
    }

    fn __repr__(&self) -> String {
        format!(
            "RunConfig(seed={}, n_piles={}, episodes={}, ablation={})",
            self.inner.train.seed, self.inner.station.n_piles, self.inner.train.episodes, self.inner.train.ablation
        )
    }
}

/// Aligned hourly building load (kW) and price ($/kWh).
#[pyclass(module = "huca", from_py_object)]
#[derive(Clone)]
pub struct Traces {
    inner: Arc<simenv::Traces>,
}

#[pymethods]
impl Traces {
    #[staticmethod]
    fn synthetic(seed: u64, days: usize) -> PyResult<Self> {
        let t = traceio::synthetic_traces_seeded(seed, days, &SyntheticProfile::default()).map_err(py_err)?;
        Ok(Self { inner: Arc::new(t) })
    }

    #[staticmethod]
    fn from_csv(load_csv: PathBuf, price_csv: PathBuf) -> PyResult<Self> {
        let set = traceio::ingest_traces(&load_csv, &price_csv).map_err(py_err)?;
        Ok(Self {
            inner: Arc::new(set.traces),
        })
    }

    #[staticmethod]
    fn constant(days: usize, load_kw: f64, price: f64) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(traceio::constant_traces(days, load_kw, price).map_err(py_err)?),
        })
    }

    #[getter]
    fn days(&self) -> usize {
        self.inner.days()
    }

    #[getter]
    fn load(&self) -> Vec<f64> {
        self.inner.load.values().to_vec()
    }

    #[getter]
    fn price(&self) -> Vec<f64> {
        self.inner.price.values().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Actor and critic networks of every agent.
#[pyclass(module = "huca", from_py_object)]
#[derive(Clone)]
pub struct PolicyBundle {
    inner: trainer::PolicyBundle,
}

#[pymethods]
impl PolicyBundle {
    #[staticmethod]
    fn initial(cfg: &RunConfig) -> PyResult<Self> {
        Ok(Self {
            inner: trainer::initial_bundle(&cfg.inner).map_err(py_err)?,
        })
    }

    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: trainer::PolicyBundle::load_dir(&dir).map_err(py_err)?,
        })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        self.inner.save_dir(&dir).map_err(py_err)
    }

    #[getter]
    fn n_piles(&self) -> usize {
        self.inner.n_piles
    }

    #[getter]
    fn hierarchical(&self) -> bool {
        self.inner.high.is_some()
    }

    #[getter]
    fn low_agents(&self) -> usize {
        self.inner.low.len()
    }
}

/// Bundle, per-episode log and log summary of a finished training run.
#[pyclass(module = "huca", skip_from_py_object)]
pub struct TrainResult {
    #[pyo3(get)]
    bundle: PolicyBundle,
    #[pyo3(get)]
    log_csv: String,
    summary_json: String,
}

#[pymethods]
impl TrainResult {
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (self.summary_json.as_str(),))
    }
}

/// Charging station stepped one hourly slot at a time.
#[pyclass(module = "huca", skip_from_py_object)]
pub struct Station {
    inner: simenv::Station,
}

#[pymethods]
impl Station {
    #[new]
    fn new(cfg: &RunConfig, traces: &Traces) -> PyResult<Self> {
        Ok(Self {
            inner: simenv::Station::new(cfg.inner.station.clone(), Arc::clone(&traces.inner)).map_err(py_err)?,
        })
    }

    /// Samples the day's EV sessions and docks them on arrival.
    #[pyo3(signature = (day, scenario = "certain", seed = 0))]
    fn begin_day<'py>(&mut self, py: Python<'py>, day: usize, scenario: &str, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let spec = EvalSpec {
            scenario: parse_scenario(scenario)?,
            days: 1,
            first_day: day,
            seed,
        };
        let n = self.inner.config().n_piles;
        let days = evalkit::eval_sessions(&spec, n, self.inner.traces().days()).map_err(py_err)?;
        self.inner.begin_day(days[0].day, &days[0].sessions).map_err(py_err)?;
        to_py(py, &days[0].sessions)
    }

    /// Per-pile `(p_min, p_max)` in kW, or None for an empty pile.
    fn bounds(&self) -> Vec<Option<(f64, f64)>> {
        self.inner.bounds().into_iter().map(|b| b.map(|b| (b.min_kw, b.max_kw))).collect()
    }

    /// Applies pile powers for the current slot and returns its ledger.
    fn step<'py>(&mut self, py: Python<'py>, powers_kw: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let ledger = self.inner.step(&powers_kw).map_err(py_err)?;
        to_py(py, &ledger)
    }
}

/// Trains a controller; releases the interpreter while running.
#[pyfunction]
fn train(py: Python<'_>, cfg: &RunConfig, traces: &Traces) -> PyResult<TrainResult> {
    let (cfg, t) = (cfg.inner.clone(), Arc::clone(&traces.inner));
    let out = py.detach(move || trainer::train(&cfg, t)).map_err(|f| HucaError::new_err(f.to_string()))?;
    Ok(TrainResult {
        log_csv: out.log.to_csv(),
        summary_json: out.log.summary_json().map_err(py_err)?,
        bundle: PolicyBundle { inner: out.bundle },
    })
}

fn spec_for(cfg: &CoreConfig, scenario: Option<&str>, days: Option<usize>, seed: Option<u64>) -> PyResult<EvalSpec> {
    Ok(EvalSpec {
        scenario: scenario.map(parse_scenario).transpose()?.unwrap_or(cfg.train.scenario),
        days: days.unwrap_or(cfg.eval_days),
        first_day: 0,
        seed: seed.unwrap_or(cfg.train.seed),
    })
}

/// Greedy evaluation; returns the metrics report as a dict.
#[pyfunction]
#[pyo3(signature = (bundle, cfg, traces, scenario = None, days = None, seed = None))]
fn evaluate<'py>(
    py: Python<'py>,
    bundle: &PolicyBundle,
    cfg: &RunConfig,
    traces: &Traces,
    scenario: Option<&str>,
    days: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec = spec_for(&cfg.inner, scenario, days, seed)?;
    let run = evalkit::evaluate(&bundle.inner, &cfg.inner, Arc::clone(&traces.inner), &spec).map_err(py_err)?;
    to_py(py, &run.report)
}

/// Evaluates `random`, `max-charge-to-target` or `max-charge`.
#[pyfunction]
#[pyo3(signature = (policy, cfg, traces, scenario = None, days = None, seed = None))]
fn evaluate_baseline<'py>(
    py: Python<'py>,
    policy: &str,
    cfg: &RunConfig,
    traces: &Traces,
    scenario: Option<&str>,
    days: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let kind = match policy {
        "random" => BaselinePolicy::Random,
        "max-charge-to-target" | "max_charge_to_target" => BaselinePolicy::MaxChargeToTarget,
        "max-charge" | "max_charge" => BaselinePolicy::MaxCharge,
        other => return Err(PyValueError::new_err(format!("unknown baseline {other:?}"))),
    };
    let spec = spec_for(&cfg.inner, scenario, days, seed)?;
    let run = evalkit::evaluate_baseline(kind, &cfg.inner, Arc::clone(&traces.inner), &spec).map_err(py_err)?;
    to_py(py, &run.report)
}

/// Price-greedy full-knowledge plan: `(metrics, schedule)`.
#[pyfunction]
#[pyo3(signature = (cfg, traces, scenario = None, days = None, seed = None))]
fn oracle<'py>(
    py: Python<'py>,
    cfg: &RunConfig,
    traces: &Traces,
    scenario: Option<&str>,
    days: Option<usize>,
    seed: Option<u64>,
) -> PyResult<(Bound<'py, PyAny>, Vec<Vec<f64>>)> {
    let spec = spec_for(&cfg.inner, scenario, days, seed)?;
    let c = &cfg.inner;
    let sessions = evalkit::eval_sessions(&spec, c.station.n_piles, traces.inner.days()).map_err(py_err)?;
    let res = evalkit::greedy_oracle(&sessions, Arc::clone(&traces.inner), &c.station, &c.penalty).map_err(py_err)?;
    Ok((to_py(py, &res.run.report)?, res.schedule))
}

#[pyfunction]
#[pyo3(signature = (peak_load_kw, contract_kw = 700.0, base_rate_usd_per_kw = 15.0, tier_threshold = 0.1))]
fn penalty_cost(peak_load_kw: f64, contract_kw: f64, base_rate_usd_per_kw: f64, tier_threshold: f64) -> f64 {
    let cfg = simenv::PenaltyConfig {
        contract_kw,
        base_rate_usd_per_kw,
        tier_threshold,
    };
    simenv::penalty_cost(peak_load_kw, &cfg)
}

#[pyfunction]
fn discretize_action(a_h: f64) -> PyResult<u8> {
    huca_core::hicontrol::discretize_action(a_h).map_err(py_err)
}

#[pyfunction]
fn map_action(g: f64, high_action_disc: u8) -> f64 {
    huca_core::locontrol::map_action(g, high_action_disc)
}

#[pyfunction]
fn optimal_power(a: f64, p_min_kw: f64, p_max_kw: f64) -> f64 {
    huca_core::locontrol::optimal_power(a, p_min_kw, p_max_kw)
}

#[pyfunction]
#[pyo3(signature = (a, delta_soc, delta_t, rho = 10.0, epsilon = 1e-6))]
fn uncertainty_factor(a: f64, delta_soc: f64, delta_t: f64, rho: f64, epsilon: f64) -> f64 {
    let u = huca_core::locontrol::UncertaintyInputs {
        delta_soc,
        delta_t,
        rho,
        epsilon,
    };
    huca_core::locontrol::uncertainty_factor(a, &u)
}

#[pyfunction]
#[pyo3(signature = (q, a, delta_soc, delta_t, rho = 10.0, epsilon = 1e-6))]
fn augment_q(q: f64, a: f64, delta_soc: f64, delta_t: f64, rho: f64, epsilon: f64) -> f64 {
    let u = huca_core::locontrol::UncertaintyInputs {
        delta_soc,
        delta_t,
        rho,
        epsilon,
    };
    huca_core::locontrol::augment_q(q, a, &u)
}

#[pymodule]
fn huca(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HucaError", m.py().get_type::<HucaError>())?;
    m.add_class::<RunConfig>()?;
    m.add_class::<Traces>()?;
    m.add_class::<PolicyBundle>()?;
    m.add_class::<TrainResult>()?;
    m.add_class::<Station>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(penalty_cost, m)?)?;
    m.add_function(wrap_pyfunction!(discretize_action, m)?)?;
    m.add_function(wrap_pyfunction!(map_action, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_power, m)?)?;
    m.add_function(wrap_pyfunction!(uncertainty_factor, m)?)?;
    m.add_function(wrap_pyfunction!(augment_q, m)?)?;
    Ok(())
}
