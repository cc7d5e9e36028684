//! Flat `key=value` run configuration.
//!
//! Every recognized key has a default, so a resolved configuration always
//! lists every setting explicitly. Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use earl_core::acquisition::AcquisitionConfig;
use earl_core::controller::{RunConfig, TerminationConfig};
use earl_core::evaluator::{
    CsvSchema, EvalConfig, ReadoutKind, SynthOptions, TaskKind, DEFAULT_E_LEAK, DEFAULT_E_SPIKE, DEFAULT_E_SYN,
};
use earl_core::model::{IntRange, RealRange};
use earl_core::readout::TrainSpec;
use earl_core::reservoir::LifEncoder;
use earl_core::rl::RlConfig;
use earl_core::{RewardParams, SearchSpace};

use crate::CliError;

fn default_entries() -> Vec<(&'static str, String)> {
    let space = SearchSpace::default();
    let run = RunConfig::default();
    let acq = AcquisitionConfig::default();
    let rl = RlConfig::default();
    let term = TerminationConfig::default();
    let eval = EvalConfig::default();
    let train = TrainSpec::default();
    let synth = SynthOptions::default();
    let enc = LifEncoder::default();
    vec![
        ("search.size_min", space.size_range.lo.to_string()),
        ("search.size_max", space.size_range.hi.to_string()),
        ("search.conn_min", space.conn_range.lo.to_string()),
        ("search.conn_max", space.conn_range.hi.to_string()),
        ("search.spectral_min", space.spectral_range.lo.to_string()),
        ("search.spectral_max", space.spectral_range.hi.to_string()),
        ("search.leak_min", space.leak_range.lo.to_string()),
        ("search.leak_max", space.leak_range.hi.to_string()),
        ("run.total_trials", run.total_trials.to_string()),
        ("run.n_init", run.n_init.to_string()),
        ("run.seed", run.master_seed.to_string()),
        ("run.k", acq.batch_size.to_string()),
        ("run.pool_size", acq.pool_size.to_string()),
        ("run.evaluate_full_batch", run.evaluate_full_batch.to_string()),
        ("run.workers", run.parallel_eval_workers.to_string()),
        ("run.scramble_init", run.scramble_init.to_string()),
        ("run.record_wall_time", run.record_wall_time.to_string()),
        ("reward.energy_weight", RewardParams::default().energy_weight.to_string()),
        ("rl.epsilon_start", rl.epsilon_start.to_string()),
        ("rl.kappa", rl.kappa.to_string()),
        ("rl.epsilon_min", rl.epsilon_min.to_string()),
        ("rl.gamma", rl.gamma.to_string()),
        ("rl.learning_rate", rl.learning_rate.to_string()),
        ("rl.capacity", rl.capacity.to_string()),
        ("rl.batch_size", rl.batch_size.to_string()),
        ("rl.update_period", rl.update_period.to_string()),
        ("rl.hidden", rl.hidden.to_string()),
        ("term.window", term.window.to_string()),
        ("term.reward_tol", term.reward_tol.to_string()),
        ("term.energy_tol", term.energy_tol.to_string()),
        ("energy.e_spike", DEFAULT_E_SPIKE.to_string()),
        ("energy.e_syn", DEFAULT_E_SYN.to_string()),
        ("energy.e_leak", DEFAULT_E_LEAK.to_string()),
        ("task.kind", TaskKind::FreqDiscrim.as_str().to_string()),
        ("task.csv", String::new()),
        ("task.sequences", synth.sequences.to_string()),
        ("task.steps", synth.steps.to_string()),
        ("task.snr_db", synth.snr_db.to_string()),
        ("task.feature_columns", "x".to_string()),
        ("task.label_column", "label".to_string()),
        ("task.sequence_column", "sequence".to_string()),
        ("task.time_column", "t".to_string()),
        ("readout.kind", eval.readout.as_str().to_string()),
        ("readout.epochs", train.epochs.to_string()),
        ("readout.batch_size", train.batch_size.to_string()),
        ("readout.lr", train.learning_rate.to_string()),
        ("readout.weight_decay", train.weight_decay.to_string()),
        ("readout.hidden", eval.hidden_dim.to_string()),
        ("readout.ridge_lambda", eval.ridge_lambda.to_string()),
        ("reservoir.spike_threshold", eval.spike_threshold.to_string()),
        ("reservoir.washout", eval.washout.to_string()),
        ("reservoir.input_scaling", eval.input_scaling.to_string()),
        ("reservoir.encoder", "none".to_string()),
        ("reservoir.encoder_gain", enc.gain.to_string()),
    ]
}

/// Raw key/value settings over the full key set.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig {
            values: default_entries().into_iter().collect(),
        }
    }
}

impl RawConfig {
    pub fn keys(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.values.keys().copied()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.trim().to_string();
                Ok(())
            }
            None => Err(CliError::Config(format!("unknown configuration key '{key}'"))),
        }
    }

    /// Apply the lines of a config file on top of the current values.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}:{}: expected key=value, got '{line}'", n + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| CliError::Config(format!("{origin}:{}: {}", n + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut raw = RawConfig::default();
        raw.apply_text(&text, &path.display().to_string())?;
        Ok(raw)
    }

    /// Apply `--key value` / `--key=value` overrides.
    pub fn apply_overrides(&mut self, args: &[String]) -> Result<(), CliError> {
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let body = arg
                .strip_prefix("--")
                .ok_or_else(|| CliError::Config(format!("expected an override of the form --key value, got '{arg}'")))?;
            match body.split_once('=') {
                Some((k, v)) => self.set(k, v)?,
                None => {
                    let v = it
                        .next()
                        .ok_or_else(|| CliError::Config(format!("override --{body} is missing a value")))?;
                    self.set(body, v)?
                }
            }
        }
        Ok(())
    }

    /// All settings, one `key=value` per line, in key order.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn resolve(&self) -> Result<Settings, CliError> {
        Settings::from_raw(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskSource {
    Synthetic { kind: TaskKind, options: SynthOptions },
    Csv { path: PathBuf, schema: CsvSchema },
}

/// Typed, validated settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub space: SearchSpace,
    pub run: RunConfig,
    pub eval: EvalConfig,
    pub e_spike: f64,
    pub e_syn: f64,
    pub e_leak: f64,
    pub task: TaskSource,
}

struct Reader<'a>(&'a RawConfig);

impl Reader<'_> {
    fn parse<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.0.get(key).expect("known key");
        v.parse::<T>()
            .map_err(|e| CliError::Config(format!("invalid value '{v}' for {key}: {e}")))
    }

    fn real(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.parse(key)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Config(format!("{key} must be finite")))
        }
    }

    fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.0.get(key).expect("known key") {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            other => Err(CliError::Config(format!("invalid value '{other}' for {key}: expected true or false"))),
        }
    }

    fn text(&self, key: &str) -> String {
        self.0.get(key).expect("known key").to_string()
    }
}

impl Settings {
    fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let r = Reader(raw);
        let space = SearchSpace::new(
            IntRange {
                lo: r.parse("search.size_min")?,
                hi: r.parse("search.size_max")?,
            },
            RealRange {
                lo: r.real("search.conn_min")?,
                hi: r.real("search.conn_max")?,
            },
            RealRange {
                lo: r.real("search.spectral_min")?,
                hi: r.real("search.spectral_max")?,
            },
            RealRange {
                lo: r.real("search.leak_min")?,
                hi: r.real("search.leak_max")?,
            },
        )
        .map_err(CliError::config)?;
        let seed: u64 = r.parse("run.seed")?;
        let run = RunConfig {
            total_trials: r.parse("run.total_trials")?,
            n_init: r.parse("run.n_init")?,
            acquisition: AcquisitionConfig {
                batch_size: r.parse("run.k")?,
                pool_size: r.parse("run.pool_size")?,
                ..AcquisitionConfig::default()
            },
            reward: RewardParams::new(r.real("reward.energy_weight")?).map_err(CliError::config)?,
            rl: RlConfig {
                epsilon_start: r.real("rl.epsilon_start")?,
                kappa: r.real("rl.kappa")?,
                epsilon_min: r.real("rl.epsilon_min")?,
                gamma: r.real("rl.gamma")?,
                learning_rate: r.real("rl.learning_rate")?,
                capacity: r.parse("rl.capacity")?,
                batch_size: r.parse("rl.batch_size")?,
                update_period: r.parse("rl.update_period")?,
                hidden: r.parse("rl.hidden")?,
            },
            termination: TerminationConfig {
                window: r.parse("term.window")?,
                reward_tol: r.real("term.reward_tol")?,
                energy_tol: r.real("term.energy_tol")?,
            },
            master_seed: seed,
            evaluate_full_batch: r.flag("run.evaluate_full_batch")?,
            parallel_eval_workers: r.parse("run.workers")?,
            scramble_init: r.flag("run.scramble_init")?,
            record_wall_time: r.flag("run.record_wall_time")?,
        };
        run.validate().map_err(CliError::config)?;

        let readout: ReadoutKind = r.parse("readout.kind")?;
        let encoder = match r.text("reservoir.encoder").as_str() {
            "none" => None,
            "lif" => Some(LifEncoder {
                gain: r.real("reservoir.encoder_gain")?,
                ..LifEncoder::default()
            }),
            other => {
                return Err(CliError::Config(format!(
                    "invalid value '{other}' for reservoir.encoder: expected none or lif"
                )))
            }
        };
        let eval = EvalConfig {
            readout,
            train_spec: TrainSpec {
                epochs: r.parse("readout.epochs")?,
                batch_size: r.parse("readout.batch_size")?,
                learning_rate: r.real("readout.lr")?,
                weight_decay: r.real("readout.weight_decay")?,
                seed,
            },
            hidden_dim: r.parse("readout.hidden")?,
            ridge_lambda: r.real("readout.ridge_lambda")?,
            spike_threshold: r.real("reservoir.spike_threshold")?,
            washout: r.parse("reservoir.washout")?,
            input_scaling: r.real("reservoir.input_scaling")?,
            encoder,
            master_seed: seed,
        };

        let csv = r.text("task.csv");
        let task = if csv.is_empty() {
            TaskSource::Synthetic {
                kind: r.parse("task.kind")?,
                options: SynthOptions {
                    sequences: r.parse("task.sequences")?,
                    steps: r.parse("task.steps")?,
                    snr_db: r.real("task.snr_db")?,
                },
            }
        } else {
            let feature_columns: Vec<String> = r
                .text("task.feature_columns")
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if feature_columns.is_empty() {
                return Err(CliError::Config("task.feature_columns lists no columns".into()));
            }
            TaskSource::Csv {
                path: PathBuf::from(csv),
                schema: CsvSchema {
                    feature_columns,
                    label_column: r.text("task.label_column"),
                    sequence_column: r.text("task.sequence_column"),
                    time_column: r.text("task.time_column"),
                },
            }
        };
        Ok(Settings {
            space,
            run,
            eval,
            e_spike: r.real("energy.e_spike")?,
            e_syn: r.real("energy.e_syn")?,
            e_leak: r.real("energy.e_leak")?,
            task,
        })
    }
}
