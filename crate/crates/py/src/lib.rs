//! Python bindings for `tbpdc`.
//!
//! Structured results (complexity reports, run outcomes, fits) cross the
//! boundary as JSON and come out as plain dicts and lists.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use tbpdc_core::baselines::BaselineConfig;
use tbpdc_core::complexity::{link_slope_bound, massart_check as core_massart, ComplexityReport};
use tbpdc_core::environment::{ComparisonModel, OracleMode, ProblemInstance, RewardChannel, Session};
use tbpdc_core::harness::{self, Algorithm, ExperimentConfig};
use tbpdc_core::instances::{self, LinkFamily, PairCount, Setup};
use tbpdc_core::rank_search::RsConfig;
use tbpdc_core::seeding::{stream, Stream};

fn py_err(e: tbpdc_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn link_family(name: &str) -> PyResult<LinkFamily> {
    match name {
        "linear" => Ok(LinkFamily::Linear),
        "btl" => Ok(LinkFamily::Btl),
        other => Err(PyValueError::new_err(format!(
            "unknown model {other:?}, expected linear or btl"
        ))),
    }
}

fn reward_channel(gaussian_scale: Option<f64>) -> RewardChannel {
    match gaussian_scale {
        Some(scale) => RewardChannel::Gaussian { scale },
        None => RewardChannel::Bernoulli,
    }
}

fn setup_named(name: &str, path: Option<PathBuf>) -> PyResult<Setup> {
    match (name, path) {
        ("fromfile", Some(path)) => Ok(Setup::Fromfile { path }),
        ("fromfile", None) => Err(PyValueError::new_err("setup fromfile needs path")),
        (name, _) => Setup::from_name(name).map_err(py_err),
    }
}

/// A validated problem instance.
#[pyclass(name = "Instance", module = "tbpdc", frozen, skip_from_py_object)]
pub struct PyInstance {
    inner: ProblemInstance,
}

#[pymethods]
impl PyInstance {
    /// `matrix` overrides `model` with an explicit preference matrix.
    #[new]
    #[pyo3(signature = (means, tau=0.5, model="linear", theta=1.0, gaussian_scale=None, matrix=None))]
    fn new(
        means: Vec<f64>,
        tau: f64,
        model: &str,
        theta: f64,
        gaussian_scale: Option<f64>,
        matrix: Option<Vec<Vec<f64>>>,
    ) -> PyResult<Self> {
        let model = match matrix {
            Some(rows) => ComparisonModel::Matrix { rows },
            None => link_family(model)?.model(theta),
        };
        let inner = ProblemInstance::new(means, tau, reward_channel(gaussian_scale), model)
            .map_err(py_err)?;
        Ok(PyInstance { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyInstance { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.inner.means().to_vec()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau()
    }

    #[getter]
    fn num_arms(&self) -> usize {
        self.inner.num_arms()
    }

    #[getter]
    fn model(&self) -> &'static str {
        self.inner.model().name()
    }

    #[getter]
    fn borda_scores(&self) -> Vec<f64> {
        self.inner.borda_scores().to_vec()
    }

    #[getter]
    fn positive_set(&self) -> Vec<usize> {
        self.inner.positive_set()
    }

    fn preference(&self, i: usize, j: usize) -> PyResult<f64> {
        let k = self.inner.num_arms();
        if i >= k || j >= k {
            return Err(PyValueError::new_err(format!("arm index out of range for K = {k}")));
        }
        Ok(self.inner.preference(i, j))
    }

    /// Largest `L` with `M_ij - 1/2 >= L (mu_i - mu_j)` for link models.
    fn slope_bound(&self) -> Option<f64> {
        link_slope_bound(self.inner.model(), self.inner.means())
    }

    fn __len__(&self) -> usize {
        self.inner.num_arms()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(K={}, tau={}, model={})",
            self.inner.num_arms(),
            self.inner.tau(),
            self.inner.model().name()
        )
    }
}

/// Algorithm ids accepted by `run`.
#[pyfunction]
fn algorithms() -> Vec<&'static str> {
    Algorithm::ALL.iter().map(|a| a.id()).collect()
}

/// Means of a named setup. Random setups are drawn from `seed`.
#[pyfunction]
#[pyo3(signature = (setup, k, seed=0, path=None))]
fn gen_means(setup: &str, k: usize, seed: u64, path: Option<PathBuf>) -> PyResult<Vec<f64>> {
    let setup = setup_named(setup, path)?;
    let mut rng = stream(seed, Stream::Instance);
    instances::gen_means(&setup, k, &mut rng).map_err(py_err)
}

/// Instance of a named setup at threshold 1/2.
#[pyfunction]
#[pyo3(signature = (setup, k, seed=0, model="linear", theta=1.0, gaussian_scale=None, path=None))]
fn generate(
    setup: &str,
    k: usize,
    seed: u64,
    model: &str,
    theta: f64,
    gaussian_scale: Option<f64>,
    path: Option<PathBuf>,
) -> PyResult<PyInstance> {
    let setup = setup_named(setup, path)?;
    let mut rng = stream(seed, Stream::Instance);
    let inner = instances::build_instance(
        &setup,
        k,
        reward_channel(gaussian_scale),
        link_family(model)?.model(theta),
        &mut rng,
    )
    .map_err(py_err)?;
    Ok(PyInstance { inner })
}

/// Gaps and sample-complexity terms of an instance.
#[pyfunction]
fn complexity<'py>(py: Python<'py>, instance: &PyInstance) -> PyResult<Bound<'py, PyAny>> {
    let report = ComplexityReport::new(&instance.inner).map_err(py_err)?;
    to_py(py, &report)
}

/// Checks the duel-complexity inequalities under the Massart-type condition
/// with gap floor `c` and slope `l` (the link's own bound when omitted).
#[pyfunction]
#[pyo3(signature = (instance, c, l=None))]
fn massart_check<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    c: f64,
    l: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let l = match l.or_else(|| link_slope_bound(instance.inner.model(), instance.inner.means())) {
        Some(l) => l,
        None => return Err(PyValueError::new_err("no slope bound for this model, pass l")),
    };
    let report = core_massart(&instance.inner, c, l).map_err(py_err)?;
    let mut value = serde_json::to_value(report).map_err(|e| PyValueError::new_err(e.to_string()))?;
    value["all_passed"] = report.all_passed().into();
    to_py(py, &value)
}

/// Runs one algorithm once. Oracle noise and algorithm randomness are two
/// streams of `seed`.
#[pyfunction]
#[pyo3(signature = (instance, algorithm="rs", delta=0.05, seed=0, noiseless=false, trace=false))]
fn run<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    algorithm: &str,
    delta: f64,
    seed: u64,
    noiseless: bool,
    trace: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let algorithm: Algorithm = algorithm.parse().map_err(py_err)?;
    let rs = RsConfig { delta, record_trace: trace, ..RsConfig::default() };
    let baseline = BaselineConfig { delta, ..BaselineConfig::default() };
    rs.validate().map_err(py_err)?;
    baseline.validate().map_err(py_err)?;
    let inst = &instance.inner;
    let mode = if noiseless { OracleMode::Noiseless } else { OracleMode::Stochastic };
    let outcome = py
        .detach(|| {
            let mut session = Session::with_mode(inst, stream(seed, Stream::Oracle), mode);
            let mut rng = stream(seed, Stream::Algorithm);
            harness::run_algorithm(algorithm, &mut session, inst.tau(), &rs, &baseline, &mut rng)
        })
        .map_err(py_err)?;
    let mut value = serde_json::to_value(&outcome).map_err(|e| PyValueError::new_err(e.to_string()))?;
    value["algorithm"] = algorithm.id().into();
    value["success"] = outcome.success(inst).into();
    value["flagged"] = outcome.flagged().into();
    value["n_pull"] = outcome.counters.n_pull.into();
    value["n_duel"] = outcome.counters.n_duel.into();
    value["predicted_positive"] = outcome.predicted_positive_set().into();
    to_py(py, &value)
}

/// Maximum-likelihood link parameter from `(i, j, wins_i, totals)` rows.
#[pyfunction]
#[pyo3(signature = (pairs, means, model="linear"))]
fn fit_theta<'py>(
    py: Python<'py>,
    pairs: Vec<(usize, usize, u64, u64)>,
    means: Vec<f64>,
    model: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let family = link_family(model)?;
    let pairs: Vec<PairCount> = pairs
        .into_iter()
        .map(|(i, j, wins_i, totals)| PairCount { i, j, wins_i, totals })
        .collect();
    let fit = instances::fit_theta(&pairs, &means, family).map_err(py_err)?;
    to_py(py, &fit)
}

/// Simulated duel counts between uniformly drawn distinct pairs, as
/// `(i, j, wins_i, totals)` rows.
#[pyfunction]
#[pyo3(signature = (instance, n, seed=0))]
fn simulate_pairs(instance: &PyInstance, n: u64, seed: u64) -> Vec<(usize, usize, u64, u64)> {
    let mut rng = stream(seed, Stream::Oracle);
    instances::simulate_pair_counts(&instance.inner, n, &mut rng)
        .into_iter()
        .map(|pc| (pc.i, pc.j, pc.wins_i, pc.totals))
        .collect()
}

/// Runs a sweep from a JSON config file, writes the run and summary CSVs
/// and returns the summary rows.
#[pyfunction]
#[pyo3(signature = (config, threads=None, out=None))]
fn sweep<'py>(
    py: Python<'py>,
    config: PathBuf,
    threads: Option<usize>,
    out: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut config = ExperimentConfig::from_path(&config).map_err(py_err)?;
    if let Some(out) = out {
        config.output_path = out;
    }
    let output = py.detach(|| harness::sweep(&config, threads)).map_err(py_err)?;
    output.write(&config.output_path).map_err(py_err)?;
    to_py(py, &output.summary)
}

#[pymodule]
pub fn tbpdc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(algorithms, m)?)?;
    m.add_function(wrap_pyfunction!(gen_means, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(complexity, m)?)?;
    m.add_function(wrap_pyfunction!(massart_check, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(fit_theta, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
