//! Python bindings: datasets, the synthetic model, replay, BRED and the
//! online ground truth. Algorithms are passed as spec strings such as
//! `"linucb alpha=1"`.

use std::path::PathBuf;

use bred_core::bred::Bandwidth;
use bred_core::format;
use bred_core::replay::expected_acceptance as core_expected_acceptance;
use bred_core::rng::{purpose, Seed};
use bred_core::{AlgoSpec, BredConfig, ReplayOptions};
use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

create_exception!(
    bred_py,
    BredError,
    PyValueError,
    "Raised when an evaluation cannot produce an estimate."
);

fn to_py(e: bred_core::Error) -> PyErr {
    match e {
        bred_core::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => BredError::new_err(other.to_string()),
    }
}

fn spec(algo: &str) -> PyResult<AlgoSpec> {
    AlgoSpec::parse_str(algo).map_err(to_py)
}

/// `"auto"`, `"none"` or a bandwidth.
#[derive(FromPyObject)]
pub enum Jitter {
    Value(f64),
    Name(String),
}

impl Jitter {
    fn resolve(self) -> PyResult<Bandwidth> {
        match self {
            Jitter::Name(s) => s.parse().map_err(PyValueError::new_err),
            Jitter::Value(h) if h.is_finite() && h >= 0.0 => Ok(Bandwidth::Fixed(h)),
            Jitter::Value(_) => Err(PyValueError::new_err(
                "jitter bandwidth must be finite and non-negative",
            )),
        }
    }
}

/// A logged bandit dataset.
#[pyclass(module = "bred_py", frozen)]
pub struct Dataset {
    pub inner: bred_core::LoggedDataset,
}

#[pymethods]
impl Dataset {
    /// Builds a dataset from parallel lists; `logging` is "uniform" or "unknown".
    #[new]
    #[pyo3(signature = (contexts, actions, rewards, k, logging = "uniform"))]
    fn py_new(
        contexts: Vec<Vec<f64>>,
        actions: Vec<usize>,
        rewards: Vec<bool>,
        k: usize,
        logging: &str,
    ) -> PyResult<Self> {
        if contexts.len() != actions.len() || actions.len() != rewards.len() {
            return Err(PyValueError::new_err(
                "contexts, actions and rewards must have equal length",
            ));
        }
        let d = contexts.first().map_or(0, Vec::len);
        let logging = logging.parse().map_err(PyValueError::new_err)?;
        let records = contexts
            .into_iter()
            .zip(actions)
            .zip(rewards)
            .map(|((c, a), r)| bred_core::Record::new(c, a, r))
            .collect();
        let inner = bred_core::LoggedDataset::new(records, d, k, logging).map_err(to_py)?;
        Ok(Dataset { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        format::load_dataset(path)
            .map(|inner| Dataset { inner })
            .map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        format::save_dataset(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn logging(&self) -> String {
        self.inner.logging().to_string()
    }

    /// Empirical click rate of the log.
    fn ctr(&self) -> f64 {
        self.inner.ctr()
    }

    fn actions(&self) -> Vec<usize> {
        self.inner.records().iter().map(|r| r.action).collect()
    }

    fn rewards(&self) -> Vec<bool> {
        self.inner.records().iter().map(|r| r.reward).collect()
    }

    fn contexts(&self) -> Vec<Vec<f64>> {
        self.inner
            .records()
            .iter()
            .map(|r| r.context.clone())
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(T={}, d={}, k={}, logging={})",
            self.inner.len(),
            self.inner.d(),
            self.inner.k(),
            self.inner.logging()
        )
    }
}

/// The synthetic click model used as ground truth.
#[pyclass(module = "bred_py", frozen)]
pub struct SyntheticModel {
    pub inner: bred_core::SyntheticModel,
}

#[pymethods]
impl SyntheticModel {
    /// Draws a model; `m` is the number of relevant weights per specific action.
    #[staticmethod]
    #[pyo3(signature = (seed = 0, m = bred_core::synthetic::DEFAULT_RELEVANT_WEIGHTS))]
    fn generate(seed: u64, m: usize) -> PyResult<Self> {
        let inner =
            bred_core::SyntheticModel::generate(&mut Seed::new(seed).stream(purpose::MODEL), m)
                .map_err(to_py)?;
        Ok(SyntheticModel { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        bred_core::SyntheticModel::load(path)
            .map(|inner| SyntheticModel { inner })
            .map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn q(&self) -> Vec<f64> {
        self.inner.q().to_vec()
    }

    fn weights(&self, action: usize) -> PyResult<Vec<f64>> {
        if action >= self.inner.k() {
            return Err(PyValueError::new_err(format!(
                "action {action} out of range"
            )));
        }
        Ok(self.inner.weights(action).to_vec())
    }

    /// Expected click probability of always playing `action`.
    fn expected_click_probability(&self, action: usize) -> PyResult<f64> {
        if action >= self.inner.k() {
            return Err(PyValueError::new_err(format!(
                "action {action} out of range"
            )));
        }
        Ok(self.inner.expected_click_probability(action))
    }

    /// Expected click rate of the uniform logging policy.
    fn expected_uniform_ctr(&self) -> f64 {
        self.inner.expected_uniform_ctr()
    }

    /// A uniformly logged dataset of `t` records.
    #[pyo3(signature = (t, seed = 0))]
    fn simulate_log(&self, py: Python<'_>, t: usize, seed: u64) -> PyResult<Dataset> {
        let inner = py
            .detach(|| {
                self.inner
                    .simulate_log(t, &mut Seed::new(seed).stream(purpose::CONTEXT))
            })
            .map_err(to_py)?;
        Ok(Dataset { inner })
    }
}

#[pyclass(module = "bred_py", frozen, get_all)]
pub struct ReplayResult {
    pub g_hat: f64,
    pub accepted: usize,
    pub total: usize,
    pub clicks: u64,
}

#[pymethods]
impl ReplayResult {
    fn __repr__(&self) -> String {
        format!(
            "ReplayResult(g_hat={}, accepted={}, total={})",
            self.g_hat, self.accepted, self.total
        )
    }
}

#[pyclass(module = "bred_py", frozen)]
pub struct EvalReport {
    pub inner: bred_core::EvalReport,
}

#[pymethods]
impl EvalReport {
    #[getter]
    fn g_hat(&self) -> f64 {
        self.inner.g_hat
    }

    #[getter]
    fn sigma_hat(&self) -> f64 {
        self.inner.sigma_hat
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.t
    }

    #[getter]
    fn bandwidth(&self) -> f64 {
        self.inner.bandwidth
    }

    #[getter]
    fn excluded_replicates(&self) -> usize {
        self.inner.excluded_replicates
    }

    #[getter]
    fn degenerate(&self) -> bool {
        self.inner.degenerate
    }

    /// Estimates of the replicates that accepted at least one record.
    fn estimates(&self) -> Vec<f64> {
        self.inner.replicate_estimates()
    }

    fn accepted_counts(&self) -> Vec<usize> {
        self.inner.accepted_counts()
    }

    /// `(lo, hi)` at the level requested, or None when degenerate.
    #[getter]
    fn confidence_region(&self) -> Option<(f64, f64)> {
        self.inner.confidence_region.map(|r| (r.lo, r.hi))
    }

    /// Region at another level.
    fn region_at(&self, level: f64) -> PyResult<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(PyValueError::new_err("level must be in (0, 1)"));
        }
        self.inner
            .confidence_region(level)
            .map(|r| (r.lo, r.hi))
            .map_err(to_py)
    }

    /// Standardized replicate values sqrt(T)(g_b - g_hat)/sigma_hat.
    fn standardized(&self) -> PyResult<Vec<f64>> {
        self.inner
            .standardized()
            .map(|z| z.values().to_vec())
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        let region = match self.inner.confidence_region {
            Some(r) => format!("({}, {})", r.lo, r.hi),
            None => "None".into(),
        };
        format!(
            "EvalReport(g_hat={}, sigma_hat={}, replicates={}, region={region})",
            self.inner.g_hat,
            self.inner.sigma_hat,
            self.inner.replicates.len()
        )
    }
}

/// Replay estimate of `algo` on `dataset`.
#[pyfunction]
#[pyo3(signature = (dataset, algo, seed = 0, force = false))]
pub fn replay(
    py: Python<'_>,
    dataset: &Dataset,
    algo: &str,
    seed: u64,
    force: bool,
) -> PyResult<ReplayResult> {
    let spec = spec(algo)?;
    let ds = &dataset.inner;
    let factory = spec.configure(ds.k(), ds.d()).map_err(to_py)?;
    let options = ReplayOptions {
        force,
        trace: false,
    };
    let r = py
        .detach(|| {
            bred_core::replay_evaluate(
                &factory,
                ds,
                &mut Seed::new(seed).stream(purpose::POLICY),
                options,
            )
        })
        .map_err(to_py)?;
    Ok(ReplayResult {
        g_hat: r.g_hat,
        accepted: r.accepted,
        total: r.total,
        clicks: r.clicks,
    })
}

/// Bootstrapped replay. `jitter` is "auto" (50/sqrt(T), the default),
/// "none" or a bandwidth.
#[pyfunction]
#[pyo3(signature = (dataset, algo, replicates = 30, jitter = None, level = 0.95, seed = 0, expansion = None, force = false))]
#[allow(clippy::too_many_arguments)]
pub fn bred(
    py: Python<'_>,
    dataset: &Dataset,
    algo: &str,
    replicates: usize,
    jitter: Option<Jitter>,
    level: f64,
    seed: u64,
    expansion: Option<usize>,
    force: bool,
) -> PyResult<EvalReport> {
    if !(level > 0.0 && level < 1.0) {
        return Err(PyValueError::new_err("level must be in (0, 1)"));
    }
    let bandwidth = jitter.map_or(Ok(Bandwidth::Auto), Jitter::resolve)?;
    let spec = spec(algo)?;
    let ds = &dataset.inner;
    let factory = spec.configure(ds.k(), ds.d()).map_err(to_py)?;
    let config = BredConfig {
        replicates,
        bandwidth,
        expansion_factor: expansion,
        level,
        force,
    };
    let inner = py
        .detach(|| bred_core::bred_evaluate(&factory, ds, &config, Seed::new(seed)))
        .map_err(to_py)?;
    Ok(EvalReport { inner })
}

/// Mean online CTR of `algo` over `runs` plays of `t` rounds, with its
/// standard error.
#[pyfunction]
#[pyo3(signature = (model, algo, t, runs = 50, seed = 0))]
pub fn ground_truth(
    py: Python<'_>,
    model: &SyntheticModel,
    algo: &str,
    t: usize,
    runs: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let spec = spec(algo)?;
    let m = &model.inner;
    let factory = spec.configure(m.k(), m.d()).map_err(to_py)?;
    let g = py
        .detach(|| bred_core::synthetic::ground_truth_ctr(m, &factory, t, runs, Seed::new(seed)))
        .map_err(to_py)?;
    Ok((g.mean, g.std_err))
}

/// Expected number of records replay accepts from a uniform log.
#[pyfunction]
pub fn expected_acceptance(t: usize, k: usize) -> PyResult<f64> {
    if k == 0 {
        return Err(PyValueError::new_err("k must be at least 1"));
    }
    Ok(core_expected_acceptance(t, k))
}

/// The default jitter bandwidth 50 / sqrt(T).
#[pyfunction]
pub fn default_bandwidth(t: usize) -> PyResult<f64> {
    if t == 0 {
        return Err(PyValueError::new_err("t must be at least 1"));
    }
    Ok(bred_core::bred::default_bandwidth(t))
}

#[pymodule]
pub fn bred_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<SyntheticModel>()?;
    m.add_class::<ReplayResult>()?;
    m.add_class::<EvalReport>()?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(bred, m)?)?;
    m.add_function(wrap_pyfunction!(ground_truth, m)?)?;
    m.add_function(wrap_pyfunction!(expected_acceptance, m)?)?;
    m.add_function(wrap_pyfunction!(default_bandwidth, m)?)?;
    m.add("BredError", m.py().get_type::<BredError>())?;
    Ok(())
}
