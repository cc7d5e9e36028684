//! Python bindings: search space, datasets, single evaluations, full
//! optimizer runs, and the GP surrogate.

use std::path::PathBuf;

use earl_core::acquisition::{self, AcquisitionConfig};
use earl_core::controller::{self, LsmObjective, NoopObserver, RunConfig, TerminationConfig};
use earl_core::evaluator::{self, CsvSchema, EnergyModel, EvalConfig, ReadoutKind, SynthOptions, TaskDataset, TaskKind};
use earl_core::gp::{CandidateStats, GpModel};
use earl_core::model::{IntRange, RealRange};
use earl_core::readout::TrainSpec;
use earl_core::{sobol, EarlError, RewardParams, TrialLog, TrialRecord};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: EarlError) -> PyErr {
    match e {
        EarlError::InvalidArgument(_)
        | EarlError::Config(_)
        | EarlError::Schema(_)
        | EarlError::Stratification(_)
        | EarlError::EmptyLog => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

#[pyclass(name = "Configuration", from_py_object)]
#[derive(Clone, Copy)]
struct PyConfiguration {
    inner: earl_core::Configuration,
}

#[pymethods]
impl PyConfiguration {
    #[new]
    fn new(reservoir_size: usize, connectivity: f64, spectral_radius: f64, leak_rate: f64) -> Self {
        PyConfiguration {
            inner: earl_core::Configuration {
                reservoir_size,
                connectivity,
                spectral_radius,
                leak_rate,
            },
        }
    }

    #[getter]
    fn reservoir_size(&self) -> usize {
        self.inner.reservoir_size
    }

    #[getter]
    fn connectivity(&self) -> f64 {
        self.inner.connectivity
    }

    #[getter]
    fn spectral_radius(&self) -> f64 {
        self.inner.spectral_radius
    }

    #[getter]
    fn leak_rate(&self) -> f64 {
        self.inner.leak_rate
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "Configuration(reservoir_size={}, connectivity={}, spectral_radius={}, leak_rate={})",
            c.reservoir_size, c.connectivity, c.spectral_radius, c.leak_rate
        )
    }
}

#[pyclass(name = "SearchSpace", from_py_object)]
#[derive(Clone, Copy)]
struct PySearchSpace {
    inner: earl_core::SearchSpace,
}

#[pymethods]
impl PySearchSpace {
    #[new]
    #[pyo3(signature = (size=(100, 1000), conn=(0.2, 0.7), spectral=(0.6, 1.1), leak=(0.1, 0.4)))]
    fn new(size: (usize, usize), conn: (f64, f64), spectral: (f64, f64), leak: (f64, f64)) -> PyResult<Self> {
        let inner = earl_core::SearchSpace::new(
            IntRange { lo: size.0, hi: size.1 },
            RealRange { lo: conn.0, hi: conn.1 },
            RealRange {
                lo: spectral.0,
                hi: spectral.1,
            },
            RealRange { lo: leak.0, hi: leak.1 },
        )
        .map_err(to_py)?;
        Ok(PySearchSpace { inner })
    }

    /// Map a point of the unit cube onto the space.
    fn scale(&self, u: [f64; 4]) -> PyConfiguration {
        PyConfiguration {
            inner: self.inner.scale(&u),
        }
    }

    fn normalize(&self, config: &PyConfiguration) -> [f64; 4] {
        self.inner.normalize(&config.inner)
    }

    fn contains(&self, config: &PyConfiguration) -> bool {
        self.inner.contains(&config.inner)
    }

    /// First `n` points of the Sobol design.
    #[pyo3(signature = (n, seed=0, scramble=false))]
    fn sobol_design(&self, n: usize, seed: u64, scramble: bool) -> PyResult<Vec<PyConfiguration>> {
        let opts = sobol::DesignOptions {
            scramble,
            ..Default::default()
        };
        let design = sobol::generate_initial_design_with(&self.inner, n, seed, opts).map_err(to_py)?;
        Ok(design.into_iter().map(|inner| PyConfiguration { inner }).collect())
    }
}

#[pyclass(name = "Dataset")]
struct PyDataset {
    inner: TaskDataset,
}

#[pymethods]
impl PyDataset {
    /// Two-class synthetic task: "freq_discrim", "noisy_parity" or "amplitude_mod".
    #[staticmethod]
    #[pyo3(signature = (kind, sequences=200, steps=50, snr_db=10.0, seed=42))]
    fn synthetic(kind: &str, sequences: usize, steps: usize, snr_db: f64, seed: u64) -> PyResult<Self> {
        let kind: TaskKind = kind.parse().map_err(to_py)?;
        let opts = SynthOptions {
            sequences,
            steps,
            snr_db,
        };
        Ok(PyDataset {
            inner: evaluator::synth_task(kind, opts, seed).map_err(to_py)?,
        })
    }

    /// Long-format CSV with one row per sequence step.
    #[staticmethod]
    #[pyo3(signature = (path, feature_columns, label_column="label", sequence_column="sequence", time_column="t", seed=42))]
    fn from_csv(
        path: PathBuf,
        feature_columns: Vec<String>,
        label_column: &str,
        sequence_column: &str,
        time_column: &str,
        seed: u64,
    ) -> PyResult<Self> {
        let schema = CsvSchema {
            feature_columns,
            label_column: label_column.to_string(),
            sequence_column: sequence_column.to_string(),
            time_column: time_column.to_string(),
        };
        Ok(PyDataset {
            inner: evaluator::ingest_csv(&path, &schema, seed).map_err(to_py)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps()
    }

    #[getter]
    fn feature_dim(&self) -> usize {
        self.inner.feature_dim()
    }

    #[getter]
    fn class_count(&self) -> usize {
        self.inner.class_count
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.inner.class_names.clone()
    }
}

fn eval_config(readout: &str, epochs: usize, seed: u64) -> PyResult<EvalConfig> {
    let readout: ReadoutKind = readout.parse().map_err(to_py)?;
    Ok(EvalConfig {
        readout,
        train_spec: TrainSpec {
            epochs,
            seed,
            ..Default::default()
        },
        master_seed: seed,
        ..Default::default()
    })
}

/// Score one configuration. Returns a dict with accuracy, energy_pj_per_sample,
/// energy_normalized, spikes, synaptic_events and error (None on success).
#[pyfunction]
#[pyo3(signature = (config, dataset, readout="gru", epochs=100, seed=42, trial_seed=0))]
fn evaluate<'py>(
    py: Python<'py>,
    config: &PyConfiguration,
    dataset: &PyDataset,
    readout: &str,
    epochs: usize,
    seed: u64,
    trial_seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let space = earl_core::SearchSpace::default();
    let energy = EnergyModel::default_for(&space, dataset.inner.steps()).map_err(to_py)?;
    let cfg = eval_config(readout, epochs, seed)?;
    let c = config.inner;
    let data = &dataset.inner;
    let e = py.detach(|| evaluator::evaluate(&c, data, &cfg, &energy, trial_seed));
    let d = PyDict::new(py);
    d.set_item("accuracy", e.objectives.accuracy)?;
    d.set_item("energy_pj_per_sample", e.objectives.energy_pj_per_sample)?;
    d.set_item("energy_normalized", e.objectives.energy_normalized)?;
    d.set_item("spikes", e.counters.spikes)?;
    d.set_item("synaptic_events", e.counters.synaptic_events)?;
    d.set_item("error", e.error)?;
    Ok(d)
}

fn record_dict<'py>(py: Python<'py>, r: &TrialRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("trial_index", r.index)?;
    d.set_item("phase", r.phase.as_str())?;
    d.set_item("selected_by", r.selected_by.as_str())?;
    d.set_item("reservoir_size", r.config.reservoir_size)?;
    d.set_item("connectivity", r.config.connectivity)?;
    d.set_item("spectral_radius", r.config.spectral_radius)?;
    d.set_item("leak_rate", r.config.leak_rate)?;
    d.set_item("accuracy", r.objectives.accuracy)?;
    d.set_item("energy_pj_per_sample", r.objectives.energy_pj_per_sample)?;
    d.set_item("energy_normalized", r.objectives.energy_normalized)?;
    d.set_item("reward", r.reward)?;
    d.set_item("seed", r.seed)?;
    Ok(d)
}

/// Outcome of an optimizer run.
#[pyclass(name = "RunResult")]
struct PyRunResult {
    log: TrialLog,
    summary: controller::RunSummary,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn trials<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.log.records().iter().map(|r| record_dict(py, r)).collect()
    }

    /// Trial indices on the accuracy/energy Pareto front.
    #[getter]
    fn pareto(&self) -> Vec<usize> {
        self.summary.pareto.clone()
    }

    #[getter]
    fn best<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        record_dict(py, &self.summary.best)
    }

    #[getter]
    fn termination(&self) -> String {
        self.summary.termination.to_string()
    }

    #[getter]
    fn sobol_trials(&self) -> usize {
        self.summary.sobol_trials
    }

    #[getter]
    fn earl_trials(&self) -> usize {
        self.summary.earl_trials
    }

    /// The trial log in the standard CSV layout.
    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.log.write_csv(&mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Run the optimizer on a dataset.
#[pyfunction]
#[pyo3(signature = (
    dataset, space=None, total_trials=50, n_init=20, k=4, seed=42, readout="gru", epochs=100,
    energy_weight=0.5, window=10, reward_tol=1e-3, energy_tol=1e-3, evaluate_full_batch=false
))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    py: Python<'_>,
    dataset: &PyDataset,
    space: Option<PySearchSpace>,
    total_trials: usize,
    n_init: usize,
    k: usize,
    seed: u64,
    readout: &str,
    epochs: usize,
    energy_weight: f64,
    window: usize,
    reward_tol: f64,
    energy_tol: f64,
    evaluate_full_batch: bool,
) -> PyResult<PyRunResult> {
    let space = space.map(|s| s.inner).unwrap_or_default();
    let cfg = RunConfig {
        total_trials,
        n_init,
        acquisition: AcquisitionConfig {
            batch_size: k,
            ..Default::default()
        },
        reward: RewardParams::new(energy_weight).map_err(to_py)?,
        termination: TerminationConfig {
            window,
            reward_tol,
            energy_tol,
        },
        master_seed: seed,
        evaluate_full_batch,
        ..Default::default()
    };
    let objective = LsmObjective {
        data: dataset.inner.clone(),
        eval_cfg: eval_config(readout, epochs, seed)?,
        energy: EnergyModel::default_for(&space, dataset.inner.steps()).map_err(to_py)?,
    };
    let (log, summary) = py
        .detach(|| controller::run(&cfg, &space, &objective, &mut NoopObserver))
        .map_err(to_py)?;
    Ok(PyRunResult { log, summary })
}

/// Matérn-5/2 GP over the unit cube.
#[pyclass(name = "GaussianProcess")]
struct PyGaussianProcess {
    inner: GpModel,
}

#[pymethods]
impl PyGaussianProcess {
    #[staticmethod]
    #[pyo3(signature = (inputs, rewards, seed=0))]
    fn fit(inputs: Vec<[f64; 4]>, rewards: Vec<f64>, seed: u64) -> PyResult<Self> {
        Ok(PyGaussianProcess {
            inner: GpModel::fit(&inputs, &rewards, seed).map_err(to_py)?,
        })
    }

    /// Posterior `(mean, variance)` in reward units.
    fn predict(&self, x: [f64; 4]) -> (f64, f64) {
        let s = self.inner.predict(&x);
        (s.mu, s.sigma2)
    }

    #[getter]
    fn log_marginal_likelihood(&self) -> f64 {
        self.inner.log_marginal_likelihood()
    }

    #[getter]
    fn length_scales(&self) -> [f64; 4] {
        self.inner.kernel().length_scales
    }
}

#[pyfunction]
fn expected_improvement(mu: f64, sigma2: f64, r_star: f64) -> f64 {
    acquisition::expected_improvement(&CandidateStats { mu, sigma2 }, r_star)
}

#[pymodule]
fn earl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PySearchSpace>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyGaussianProcess>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(expected_improvement, m)?)?;
    Ok(())
}
