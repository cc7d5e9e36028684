//! Datasets, the energy model, and configuration evaluation.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{EarlError, Result};
use crate::model::{Configuration, ObjectiveValues, SearchSpace};
use crate::readout::{self, GruParams, RidgeReadout, TrainSpec};
use crate::reservoir::{run_batch, ActivityCounters, LifEncoder, ReservoirWeights};
use crate::seed::{derive_seed, rng_from, streams};

/// Fraction of each class held out for validation.
pub const VALIDATION_FRACTION: f64 = 0.2;

/// Labelled, normalized sequence data with a fixed train/validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    /// `S x T x D`
    pub features: Vec<Vec<Vec<f64>>>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    /// Per-feature statistics used for the z-score, from the training split.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
    /// Original label text per class index, when ingested from CSV.
    pub class_names: Vec<String>,
}

impl TaskDataset {
    /// Split stratified by class, then z-score every feature with
    /// training-split statistics.
    pub fn from_raw(
        features: Vec<Vec<Vec<f64>>>,
        labels: Vec<usize>,
        class_count: usize,
        split_seed: u64,
    ) -> Result<Self> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(EarlError::invalid(format!(
                "{} sequences but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let t = features[0].len();
        let d = features[0].first().map_or(0, Vec::len);
        if t == 0 || d == 0 {
            return Err(EarlError::invalid("sequences need at least one step and one feature"));
        }
        for (i, s) in features.iter().enumerate() {
            if s.len() != t || s.iter().any(|row| row.len() != d) {
                return Err(EarlError::Schema(format!(
                    "sequence {i} has a different shape from sequence 0 ({t} steps x {d} features)"
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= class_count) {
            return Err(EarlError::invalid(format!("label {bad} outside 0..{class_count}")));
        }
        let (train_indices, val_indices) = stratified_split(&labels, class_count, split_seed)?;

        let count = (train_indices.len() * t) as f64;
        let mut mean = vec![0.0; d];
        for &i in &train_indices {
            for row in &features[i] {
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        let mut std = vec![0.0; d];
        for &i in &train_indices {
            for row in &features[i] {
                for k in 0..d {
                    std[k] += (row[k] - mean[k]).powi(2);
                }
            }
        }
        for (k, s) in std.iter_mut().enumerate() {
            *s = (*s / count).sqrt();
            if !(*s > 1e-12) {
                warn!("feature {k} is constant on the training split; std clamped to 1");
                *s = 1.0;
            }
        }
        let features = features
            .into_iter()
            .map(|seq| {
                seq.into_iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .map(|(k, v)| (v - mean[k]) / std[k])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(TaskDataset {
            features,
            labels,
            class_count,
            mean,
            std,
            train_indices,
            val_indices,
            class_names: (0..class_count).map(|c| c.to_string()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.features[0].len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features[0][0].len()
    }
}

fn stratified_split(labels: &[usize], classes: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = rng_from(derive_seed(seed, streams::SPLIT));
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < 2 {
            return Err(EarlError::Stratification(format!(
                "class {c} has {} sequence(s); at least 2 are needed for a split",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n_val = ((VALIDATION_FRACTION * members.len() as f64).round() as usize).max(1);
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Column roles for CSV ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub feature_columns: Vec<String>,
    pub label_column: String,
    pub sequence_column: String,
    pub time_column: String,
}

/// Read long-format rows (one row per sequence step) into a dataset.
pub fn ingest_csv(path: &Path, schema: &CsvSchema, split_seed: u64) -> Result<TaskDataset> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, schema, split_seed)
}

pub fn ingest_reader<R: std::io::Read>(input: R, schema: &CsvSchema, split_seed: u64) -> Result<TaskDataset> {
    if schema.feature_columns.is_empty() {
        return Err(EarlError::Schema("no feature columns given".into()));
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| EarlError::Schema(format!("missing column '{name}'")))
    };
    let feat_idx: Vec<usize> = schema.feature_columns.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let label_idx = find(&schema.label_column)?;
    let seq_idx = find(&schema.sequence_column)?;
    let time_idx = find(&schema.time_column)?;

    struct Group {
        label: String,
        rows: Vec<(f64, Vec<f64>)>,
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Group> = HashMap::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let num = |idx: usize, col: &str| -> Result<f64> {
            rec[idx].parse::<f64>().map_err(|_| {
                EarlError::Schema(format!("row {}: column '{col}' is not numeric: '{}'", line + 2, &rec[idx]))
            })
        };
        let feats = feat_idx
            .iter()
            .zip(&schema.feature_columns)
            .map(|(&i, c)| num(i, c))
            .collect::<Result<Vec<_>>>()?;
        let time = num(time_idx, &schema.time_column)?;
        let id = rec[seq_idx].to_string();
        let label = rec[label_idx].to_string();
        let g = groups.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Group {
                label: label.clone(),
                rows: Vec::new(),
            }
        });
        if g.label != label {
            return Err(EarlError::Schema(format!(
                "sequence '{id}' has conflicting labels '{}' and '{label}'",
                g.label
            )));
        }
        g.rows.push((time, feats));
    }
    if order.is_empty() {
        return Err(EarlError::Schema("no data rows".into()));
    }

    let mut names: Vec<String> = groups.values().map(|g| g.label.clone()).collect();
    names.sort();
    names.dedup();
    if names.iter().all(|n| n.parse::<i64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<i64>().unwrap());
    }
    let class_of: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    let mut features = Vec::with_capacity(order.len());
    let mut labels = Vec::with_capacity(order.len());
    for id in &order {
        let g = groups.get_mut(id).unwrap();
        g.rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        labels.push(class_of[g.label.as_str()]);
        features.push(g.rows.drain(..).map(|(_, f)| f).collect());
    }
    let mut ds = TaskDataset::from_raw(features, labels, names.len(), split_seed)?;
    ds.class_names = names;
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    FreqDiscrim,
    NoisyParity,
    AmplitudeMod,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::FreqDiscrim => "freq_discrim",
            TaskKind::NoisyParity => "noisy_parity",
            TaskKind::AmplitudeMod => "amplitude_mod",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = EarlError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "freq_discrim" => Ok(TaskKind::FreqDiscrim),
            "noisy_parity" => Ok(TaskKind::NoisyParity),
            "amplitude_mod" => Ok(TaskKind::AmplitudeMod),
            other => Err(EarlError::Config(format!("unknown task kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub sequences: usize,
    pub steps: usize,
    pub snr_db: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            sequences: 200,
            steps: 50,
            snr_db: 10.0,
        }
    }
}

/// Generate a two-class synthetic sequence task.
///
/// * `freq_discrim`: one channel, a sine at 0.05 or 0.1 cycles/step.
/// * `noisy_parity`: three ±1 channels; the label is the parity of three
///   planted (channel, step) positions.
/// * `amplitude_mod`: one channel, a carrier whose envelope rises or falls.
pub fn synth_task(kind: TaskKind, opts: SynthOptions, seed: u64) -> Result<TaskDataset> {
    let (s, t) = (opts.sequences, opts.steps);
    if s < 20 || t < 10 {
        return Err(EarlError::invalid(format!(
            "synthetic tasks need at least 20 sequences and 10 steps, got {s} x {t}"
        )));
    }
    let mut rng = rng_from(derive_seed(seed, streams::DATA));
    let noise_sd = (0.5 / 10f64.powf(opts.snr_db / 10.0)).sqrt();
    let noise = Normal::new(0.0, noise_sd).map_err(|e| EarlError::invalid(e.to_string()))?;
    let labels: Vec<usize> = (0..s).map(|i| i % 2).collect();
    let features: Vec<Vec<Vec<f64>>> = match kind {
        TaskKind::FreqDiscrim => labels
            .iter()
            .map(|&y| {
                let f = if y == 0 { 0.05 } else { 0.1 };
                let phase = rng.random_range(-0.3..0.3);
                (0..t)
                    .map(|k| vec![(2.0 * PI * f * k as f64 + phase).sin() + noise.sample(&mut rng)])
                    .collect()
            })
            .collect(),
        TaskKind::NoisyParity => {
            let d = 3;
            let planted: Vec<(usize, usize)> = (0..3).map(|c| (c, rng.random_range(0..t))).collect();
            labels
                .iter()
                .map(|&y| {
                    let mut bits: Vec<Vec<bool>> =
                        (0..t).map(|_| (0..d).map(|_| rng.random::<bool>()).collect()).collect();
                    let parity = planted.iter().filter(|&&(c, k)| bits[k][c]).count() % 2;
                    if parity != y {
                        let (c, k) = planted[0];
                        bits[k][c] = !bits[k][c];
                    }
                    bits.iter()
                        .map(|row| {
                            row.iter()
                                .map(|&b| (if b { 1.0 } else { -1.0 }) + noise.sample(&mut rng))
                                .collect()
                        })
                        .collect()
                })
                .collect()
        }
        TaskKind::AmplitudeMod => labels
            .iter()
            .map(|&y| {
                let phase = rng.random_range(0.0..2.0 * PI);
                (0..t)
                    .map(|k| {
                        let frac = k as f64 / (t - 1) as f64;
                        let env = if y == 0 { frac } else { 1.0 - frac };
                        vec![env * (2.0 * PI * 0.15 * k as f64 + phase).sin() + noise.sample(&mut rng)]
                    })
                    .collect()
            })
            .collect(),
    };
    TaskDataset::from_raw(features, labels, 2, seed)
}

/// Per-event energy coefficients (pJ) and the normalization denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub e_spike: f64,
    pub e_syn: f64,
    pub e_leak: f64,
    pub reference_energy: f64,
}

pub const DEFAULT_E_SPIKE: f64 = 1.0;
pub const DEFAULT_E_SYN: f64 = 0.1;
pub const DEFAULT_E_LEAK: f64 = 0.01;

impl EnergyModel {
    /// Coefficients with the reference set to the worst case over `space`
    /// for sequences of `steps` steps.
    pub fn for_space(space: &SearchSpace, steps: usize, e_spike: f64, e_syn: f64, e_leak: f64) -> Result<Self> {
        let mut m = EnergyModel {
            e_spike,
            e_syn,
            e_leak,
            reference_energy: 1.0,
        };
        m.reference_energy = reference_energy_for(space, steps, &m);
        m.validate()?;
        Ok(m)
    }

    pub fn default_for(space: &SearchSpace, steps: usize) -> Result<Self> {
        Self::for_space(space, steps, DEFAULT_E_SPIKE, DEFAULT_E_SYN, DEFAULT_E_LEAK)
    }

    pub fn validate(&self) -> Result<()> {
        let coeffs = [self.e_spike, self.e_syn, self.e_leak];
        if coeffs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
            return Err(EarlError::Config("energy coefficients must be finite and non-negative".into()));
        }
        if !(self.reference_energy > 0.0) {
            return Err(EarlError::Config(format!(
                "reference energy must be positive, got {}",
                self.reference_energy
            )));
        }
        Ok(())
    }

    /// Raw pJ/sample for `counters` accumulated over `samples` sequences.
    pub fn energy_per_sample(&self, counters: &ActivityCounters, samples: usize) -> f64 {
        (self.e_spike * counters.spikes as f64
            + self.e_syn * counters.synaptic_events as f64
            + self.e_leak * counters.neuron_steps as f64)
            / samples as f64
    }
}

/// Worst-case pJ/sample: the largest reservoir at maximal connectivity with
/// every neuron spiking on every step.
pub fn reference_energy_for(space: &SearchSpace, steps: usize, energy: &EnergyModel) -> f64 {
    let n = space.size_range.hi as f64;
    let t = steps as f64;
    let conn = space.conn_range.hi;
    energy.e_spike * n * t + energy.e_syn * n * n * conn * t + energy.e_leak * n * t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutKind {
    Gru,
    Ridge,
}

impl ReadoutKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReadoutKind::Gru => "gru",
            ReadoutKind::Ridge => "ridge",
        }
    }
}

impl std::str::FromStr for ReadoutKind {
    type Err = EarlError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gru" => Ok(ReadoutKind::Gru),
            "ridge" => Ok(ReadoutKind::Ridge),
            other => Err(EarlError::Config(format!("unknown readout '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub readout: ReadoutKind,
    pub train_spec: TrainSpec,
    pub hidden_dim: usize,
    pub ridge_lambda: f64,
    pub spike_threshold: f64,
    /// Leading states hidden from the readout; still counted for energy.
    pub washout: usize,
    pub input_scaling: f64,
    /// When set, inputs pass through a LIF spike encoder first.
    pub encoder: Option<LifEncoder>,
    pub master_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            readout: ReadoutKind::Gru,
            train_spec: TrainSpec::default(),
            hidden_dim: 32,
            ridge_lambda: 1e-2,
            spike_threshold: 0.5,
            washout: 0,
            input_scaling: crate::reservoir::DEFAULT_INPUT_SCALING,
            encoder: None,
            master_seed: 42,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self, steps: usize) -> Result<()> {
        self.train_spec.validate()?;
        if self.washout >= steps {
            return Err(EarlError::Config(format!(
                "washout {} leaves no states from {steps}-step sequences",
                self.washout
            )));
        }
        if self.hidden_dim == 0 {
            return Err(EarlError::Config("readout hidden dimension must be positive".into()));
        }
        if !(self.ridge_lambda > 0.0) {
            return Err(EarlError::Config("ridge lambda must be positive".into()));
        }
        if !(self.spike_threshold >= 0.0) {
            return Err(EarlError::Config("spike threshold must be non-negative".into()));
        }
        Ok(())
    }
}

/// Outcome of one evaluation. On failure the objectives are the sentinel
/// and `error` carries the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objectives: ObjectiveValues,
    pub counters: ActivityCounters,
    pub error: Option<String>,
}

impl Evaluation {
    pub fn is_failure(&self) -> bool {
        self.error.is_some()
    }
}

/// Evaluate `config` on `data`, never failing: errors are mapped to the
/// sentinel objectives. `trial_seed` identifies the trial; the reservoir
/// and readout seeds derive from it and `eval_cfg.master_seed`.
pub fn evaluate(
    config: &Configuration,
    data: &TaskDataset,
    eval_cfg: &EvalConfig,
    energy: &EnergyModel,
    trial_seed: u64,
) -> Evaluation {
    match try_evaluate(config, data, eval_cfg, energy, trial_seed) {
        Ok(e) => e,
        Err(err) => {
            warn!("evaluation of {config} failed: {err}");
            Evaluation {
                objectives: ObjectiveValues::sentinel(),
                counters: ActivityCounters::default(),
                error: Some(err.to_string()),
            }
        }
    }
}

pub fn try_evaluate(
    config: &Configuration,
    data: &TaskDataset,
    eval_cfg: &EvalConfig,
    energy: &EnergyModel,
    trial_seed: u64,
) -> Result<Evaluation> {
    eval_cfg.validate(data.steps())?;
    energy.validate()?;
    let base = derive_seed(eval_cfg.master_seed, trial_seed);
    let weights = ReservoirWeights::build_scaled(
        config,
        data.feature_dim(),
        derive_seed(base, streams::RESERVOIR),
        eval_cfg.input_scaling,
    )?;
    let encoded;
    let inputs = match &eval_cfg.encoder {
        Some(enc) => {
            encoded = data.features.iter().map(|s| enc.encode(s)).collect::<Result<Vec<_>>>()?;
            &encoded
        }
        None => &data.features,
    };
    let mut counters = ActivityCounters::default();
    let trajectories: Vec<Vec<Vec<f64>>> =
        run_batch(&weights, config.leak_rate, inputs, &mut counters, eval_cfg.spike_threshold)?
            .into_iter()
            .map(|mut states| states.split_off(eval_cfg.washout))
            .collect();

    let train_labels: Vec<usize> = data.train_indices.iter().map(|&i| data.labels[i]).collect();
    let readout_seed = derive_seed(base, streams::READOUT);
    let predictions: Vec<usize> = match eval_cfg.readout {
        ReadoutKind::Ridge => {
            let train: Vec<Vec<Vec<f64>>> =
                data.train_indices.iter().map(|&i| trajectories[i].clone()).collect();
            let fit = readout::ridge_readout(&train, &train_labels, data.class_count, eval_cfg.ridge_lambda)?;
            data.val_indices
                .iter()
                .map(|&i| fit.predict(trajectories[i].last().unwrap()))
                .collect()
        }
        ReadoutKind::Gru => {
            let train: Vec<Vec<Vec<f64>>> =
                data.train_indices.iter().map(|&i| trajectories[i].clone()).collect();
            let init = GruParams::init(config.reservoir_size, eval_cfg.hidden_dim, data.class_count, readout_seed);
            let spec = TrainSpec {
                seed: derive_seed(readout_seed, 1),
                ..eval_cfg.train_spec
            };
            let out = readout::train(init, &train, &train_labels, &spec)?;
            data.val_indices
                .iter()
                .map(|&i| out.params.predict(&trajectories[i]))
                .collect::<Result<_>>()?
        }
    };
    let correct = data
        .val_indices
        .iter()
        .zip(&predictions)
        .filter(|(&i, &p)| data.labels[i] == p)
        .count();
    let accuracy = correct as f64 / data.val_indices.len() as f64;
    let raw = energy.energy_per_sample(&counters, data.len());
    Ok(Evaluation {
        objectives: ObjectiveValues::new(accuracy, raw, energy.reference_energy),
        counters,
        error: None,
    })
}

/// Ridge classifier on the flattened raw features; a sanity ceiling for
/// synthetic tasks.
pub fn raw_feature_ridge_accuracy(data: &TaskDataset, lambda: f64) -> Result<f64> {
    let flat = |i: usize| data.features[i].concat();
    let x: Vec<Vec<f64>> = data.train_indices.iter().map(|&i| flat(i)).collect();
    let y: Vec<usize> = data.train_indices.iter().map(|&i| data.labels[i]).collect();
    let fit = RidgeReadout::fit(&x, &y, data.class_count, lambda, true)?;
    let correct = data
        .val_indices
        .iter()
        .filter(|&&i| fit.predict(&flat(i)) == data.labels[i])
        .count();
    Ok(correct as f64 / data.val_indices.len() as f64)
}

/// Closed-form stand-in for an LSM evaluation: accuracy peaks at an
/// interior point and energy grows with size and connectivity. Deterministic
/// and cheap, for exercising the optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticObjective {
    pub space: SearchSpace,
    pub optimum: [f64; 4],
    pub width: f64,
    pub reference_energy: f64,
}

impl SyntheticObjective {
    pub fn new(space: SearchSpace) -> Self {
        SyntheticObjective {
            space,
            optimum: [0.4, 0.6, 0.7, 0.5],
            width: 0.3,
            reference_energy: 1000.0,
        }
    }

    pub fn objectives(&self, c: &Configuration) -> ObjectiveValues {
        let u = self.space.normalize(c);
        let d2: f64 = u.iter().zip(&self.optimum).map(|(a, b)| (a - b).powi(2)).sum();
        let accuracy = 0.5 + 0.45 * (-d2 / (2.0 * self.width * self.width)).exp();
        let energy = self.reference_energy * (0.05 + 0.9 * u[0] * (0.3 + 0.7 * u[1]));
        ObjectiveValues::new(accuracy, energy, self.reference_energy)
    }
}
