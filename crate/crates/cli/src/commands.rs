use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use earl_core::controller::{run, LsmObjective, RunObserver, RunSummary, TerminationReason};
use earl_core::evaluator::{ingest_csv, synth_task, try_evaluate, EnergyModel, TaskDataset};
use earl_core::model::write_trial_rows;
use earl_core::{compute_reward, pareto_front, Configuration, EarlError, TrialLog, TrialRecord};
use log::info;

use crate::config::{RawConfig, Settings, TaskSource};
use crate::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A dataset plus a one-line description for the manifest.
pub struct LoadedTask {
    pub data: TaskDataset,
    pub descriptor: String,
}

pub fn load_task(settings: &Settings) -> Result<LoadedTask, CliError> {
    let seed = settings.run.master_seed;
    let (data, source) = match &settings.task {
        TaskSource::Synthetic { kind, options } => (
            synth_task(*kind, *options, seed).map_err(CliError::config)?,
            format!(
                "synthetic:{} snr_db={}",
                kind.as_str(),
                options.snr_db
            ),
        ),
        TaskSource::Csv { path, schema } => {
            if !path.is_file() {
                return Err(CliError::Config(format!("dataset file {} does not exist", path.display())));
            }
            (
                ingest_csv(path, schema, seed).map_err(CliError::config)?,
                format!("csv:{}", path.display()),
            )
        }
    };
    let descriptor = format!(
        "{source} sequences={} steps={} features={} classes={} train={} val={}",
        data.len(),
        data.steps(),
        data.feature_dim(),
        data.class_count,
        data.train_indices.len(),
        data.val_indices.len()
    );
    Ok(LoadedTask { data, descriptor })
}

/// Everything a run needs, resolved and validated.
pub struct Prepared {
    pub raw: RawConfig,
    pub settings: Settings,
    pub task: LoadedTask,
    pub energy: EnergyModel,
}

pub fn prepare(config: &Path, overrides: &[String]) -> Result<Prepared, CliError> {
    let mut raw = RawConfig::load(config)?;
    raw.apply_overrides(overrides)?;
    let settings = raw.resolve()?;
    let task = load_task(&settings)?;
    let energy = EnergyModel::for_space(
        &settings.space,
        task.data.steps(),
        settings.e_spike,
        settings.e_syn,
        settings.e_leak,
    )
    .map_err(CliError::config)?;
    settings.eval.validate(task.data.steps()).map_err(CliError::config)?;
    Ok(Prepared {
        raw,
        settings,
        task,
        energy,
    })
}

pub fn manifest_text(p: &Prepared) -> String {
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut s = String::new();
    let _ = writeln!(s, "# earl run manifest");
    let _ = writeln!(s, "# tool_version={TOOL_VERSION}");
    let _ = writeln!(s, "# created_unix={created}");
    let _ = writeln!(s, "# dataset={}", p.task.descriptor);
    let _ = writeln!(s, "# reference_energy_pj={}", p.energy.reference_energy);
    s.push_str(&p.raw.to_text());
    s
}

pub fn summary_text(log: &TrialLog, summary: &RunSummary) -> String {
    let b = &summary.best;
    let e = &log.records()[summary.incumbent.min_energy_index];
    let mut s = String::new();
    let _ = writeln!(s, "best_trial={}", b.index);
    let _ = writeln!(s, "best_reward={}", b.reward);
    let _ = writeln!(s, "best_accuracy={}", b.objectives.accuracy);
    let _ = writeln!(s, "best_energy_pj_per_sample={}", b.objectives.energy_pj_per_sample);
    let _ = writeln!(s, "best_reservoir_size={}", b.config.reservoir_size);
    let _ = writeln!(s, "best_connectivity={}", b.config.connectivity);
    let _ = writeln!(s, "best_spectral_radius={}", b.config.spectral_radius);
    let _ = writeln!(s, "best_leak_rate={}", b.config.leak_rate);
    let _ = writeln!(s, "min_energy_trial={}", e.index);
    let _ = writeln!(s, "min_energy_normalized={}", e.objectives.energy_normalized);
    let _ = writeln!(s, "termination={}", summary.termination);
    let _ = writeln!(s, "total_trials={}", log.len());
    let _ = writeln!(s, "sobol_trials={}", summary.sobol_trials);
    let _ = writeln!(s, "earl_trials={}", summary.earl_trials);
    let _ = writeln!(s, "failed_evaluations={}", summary.failed_evaluations);
    let _ = writeln!(s, "surrogate_fallbacks={}", summary.surrogate_fallbacks);
    let _ = writeln!(s, "pareto_size={}", summary.pareto.len());
    s
}

struct Progress;

impl RunObserver for Progress {
    fn trial_completed(&mut self, r: &TrialRecord, error: Option<&str>) {
        info!(
            "trial {:>3} [{}] {} acc={:.4} energy={:.4} reward={:.4}{}",
            r.index,
            r.selected_by.as_str(),
            r.config,
            r.objectives.accuracy,
            r.objectives.energy_normalized,
            r.reward,
            error.map(|e| format!(" (failed: {e})")).unwrap_or_default()
        );
    }

    fn terminated(&mut self, reason: &TerminationReason) {
        info!("run finished: {reason}");
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn trial_rows<'a>(rows: impl Iterator<Item = &'a TrialRecord>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_trial_rows(&mut buf, rows).map_err(CliError::runtime)?;
    Ok(buf)
}

pub struct OptimizeOutcome {
    pub log: TrialLog,
    pub summary: RunSummary,
    pub out_dir: PathBuf,
}

/// Run the optimizer and write trials.csv, pareto.csv, summary.txt and
/// manifest.txt into `out_dir`. Nothing is written when the configuration
/// is rejected.
pub fn optimize(config: &Path, overrides: &[String], out_dir: &Path) -> Result<OptimizeOutcome, CliError> {
    let p = prepare(config, overrides)?;
    let objective = LsmObjective {
        data: p.task.data.clone(),
        eval_cfg: p.settings.eval.clone(),
        energy: p.energy,
    };
    info!("dataset {}", p.task.descriptor);
    let (log, summary) = run(&p.settings.run, &p.settings.space, &objective, &mut Progress).map_err(CliError::runtime)?;

    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    write_file(&out_dir.join("manifest.txt"), manifest_text(&p).as_bytes())?;
    write_file(&out_dir.join("trials.csv"), &trial_rows(log.records().iter())?)?;
    let front = summary.pareto.iter().map(|&i| &log.records()[i]);
    write_file(&out_dir.join("pareto.csv"), &trial_rows(front)?)?;
    write_file(&out_dir.join("summary.txt"), summary_text(&log, &summary).as_bytes())?;
    Ok(OptimizeOutcome {
        log,
        summary,
        out_dir: out_dir.to_path_buf(),
    })
}

/// Score one configuration and return labeled `key=value` lines.
pub fn evaluate_one(config: &Path, overrides: &[String], c: Configuration) -> Result<String, CliError> {
    let p = prepare(config, overrides)?;
    p.settings.space.check(&c).map_err(CliError::config)?;
    let seed = earl_core::controller::trial_seed(p.settings.run.master_seed, 0);
    let e = try_evaluate(&c, &p.task.data, &p.settings.eval, &p.energy, seed).map_err(|e| match e {
        EarlError::Config(_) | EarlError::InvalidArgument(_) => CliError::config(e),
        other => CliError::runtime(other),
    })?;
    let reward = compute_reward(
        e.objectives.accuracy,
        e.objectives.energy_normalized,
        p.settings.run.reward,
    )
    .map_err(CliError::runtime)?;
    Ok(format!(
        "accuracy={}\nenergy_pj_per_sample={}\nenergy_normalized={}\nreward={}\n",
        e.objectives.accuracy, e.objectives.energy_pj_per_sample, e.objectives.energy_normalized, reward
    ))
}

/// Write the plot-ready series for a trial log.
pub fn report(trials: &Path, out_dir: &Path) -> Result<(), CliError> {
    let file = fs::File::open(trials)
        .map_err(|e| CliError::Config(format!("cannot open {}: {e}", trials.display())))?;
    let log = TrialLog::read_csv(file, Default::default()).map_err(CliError::config)?;
    let front = pareto_front(&log).map_err(CliError::config)?;
    let (acc, energy, pareto) = report_series(&log, &front);
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    write_file(&out_dir.join("accuracy_vs_trial.csv"), acc.as_bytes())?;
    write_file(&out_dir.join("energy_vs_trial.csv"), energy.as_bytes())?;
    write_file(&out_dir.join("pareto_vs_all.csv"), pareto.as_bytes())?;
    Ok(())
}

fn report_series(log: &TrialLog, front: &[usize]) -> (String, String, String) {
    let mut acc = String::from("trial_index,phase,accuracy,best_accuracy\n");
    let mut energy = String::from(
        "trial_index,phase,energy_pj_per_sample,min_energy_pj_per_sample,energy_normalized,min_energy_normalized\n",
    );
    let mut pareto = String::from("trial_index,accuracy,energy_pj_per_sample,energy_normalized,on_front\n");
    let mut best_acc = f64::NEG_INFINITY;
    let mut min_pj = f64::INFINITY;
    let mut min_norm = f64::INFINITY;
    for r in log.records() {
        let o = &r.objectives;
        best_acc = best_acc.max(o.accuracy);
        min_pj = min_pj.min(o.energy_pj_per_sample);
        min_norm = min_norm.min(o.energy_normalized);
        let phase = r.phase.as_str();
        let _ = writeln!(acc, "{},{phase},{},{best_acc}", r.index, o.accuracy);
        let _ = writeln!(
            energy,
            "{},{phase},{},{min_pj},{},{min_norm}",
            r.index, o.energy_pj_per_sample, o.energy_normalized
        );
        let on = u8::from(front.contains(&r.index));
        let _ = writeln!(
            pareto,
            "{},{},{},{},{on}",
            r.index, o.accuracy, o.energy_pj_per_sample, o.energy_normalized
        );
    }
    (acc, energy, pareto)
}
