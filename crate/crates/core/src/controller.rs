//! The optimization loop: Sobol initialization, then GP-guided batches from
//! which the RL agent picks what to evaluate, until the budget is spent or
//! progress stalls.

use std::time::Instant;

use log::{info, warn};
use rand::Rng;
use rayon::prelude::*;

use crate::acquisition::{propose_batch, AcquisitionConfig, Candidate};
use crate::error::{EarlError, Result};
use crate::evaluator::{evaluate, EnergyModel, EvalConfig, Evaluation, SyntheticObjective, TaskDataset};
use crate::gp::{FitOptions, GpModel};
use crate::model::{
    pareto_front, Configuration, Incumbent, Phase, RewardParams, SearchSpace, SelectedBy, TrialLog, TrialRecord,
};
use crate::reservoir::ActivityCounters;
use crate::rl::{build_state, RlAgent, RlConfig, RlState, RlTransition};
use crate::seed::{derive_seed, rng_from, streams};
use crate::sobol::{generate_initial_design_with, DesignOptions, SobolStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminationConfig {
    /// Number of consecutive optimizer-phase trials without progress.
    pub window: usize,
    pub reward_tol: f64,
    pub energy_tol: f64,
}

impl Default for TerminationConfig {
    fn default() -> Self {
        TerminationConfig {
            window: 10,
            reward_tol: 1e-3,
            energy_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub total_trials: usize,
    pub n_init: usize,
    pub acquisition: AcquisitionConfig,
    pub reward: RewardParams,
    pub rl: RlConfig,
    pub termination: TerminationConfig,
    pub master_seed: u64,
    /// Evaluate every batch member instead of only the selected one.
    pub evaluate_full_batch: bool,
    pub parallel_eval_workers: usize,
    pub scramble_init: bool,
    /// Store measured seconds per trial; zero otherwise, keeping logs
    /// byte-reproducible.
    pub record_wall_time: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            total_trials: 50,
            n_init: 20,
            acquisition: AcquisitionConfig::default(),
            reward: RewardParams::default(),
            rl: RlConfig::default(),
            termination: TerminationConfig::default(),
            master_seed: 42,
            evaluate_full_batch: false,
            parallel_eval_workers: 1,
            scramble_init: false,
            record_wall_time: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.total_trials < 2 {
            return Err(EarlError::Config("total trials must be at least 2".into()));
        }
        if self.n_init == 0 || self.n_init >= self.total_trials {
            return Err(EarlError::Config(format!(
                "initial trials ({}) must be at least 1 and below total trials ({})",
                self.n_init, self.total_trials
            )));
        }
        if self.termination.window == 0 {
            return Err(EarlError::Config("termination window must be at least 1".into()));
        }
        if !(self.termination.reward_tol >= 0.0) || !(self.termination.energy_tol >= 0.0) {
            return Err(EarlError::Config("termination tolerances must be non-negative".into()));
        }
        if self.parallel_eval_workers == 0 {
            return Err(EarlError::Config("at least one evaluation worker is needed".into()));
        }
        self.acquisition.validate()?;
        self.rl.validate()
    }
}

/// Identifies one trial to an objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalContext {
    pub index: usize,
    pub seed: u64,
}

/// Anything that scores a configuration. Implementations must be pure in
/// `(ctx, config)` for runs to be reproducible.
pub trait Objective: Sync {
    fn evaluate(&self, ctx: &EvalContext, config: &Configuration) -> Evaluation;
}

impl<F> Objective for F
where
    F: Fn(&EvalContext, &Configuration) -> Evaluation + Sync,
{
    fn evaluate(&self, ctx: &EvalContext, config: &Configuration) -> Evaluation {
        self(ctx, config)
    }
}

/// Reservoir + readout evaluation on a fixed dataset.
#[derive(Debug, Clone)]
pub struct LsmObjective {
    pub data: TaskDataset,
    pub eval_cfg: EvalConfig,
    pub energy: EnergyModel,
}

impl Objective for LsmObjective {
    fn evaluate(&self, ctx: &EvalContext, config: &Configuration) -> Evaluation {
        evaluate(config, &self.data, &self.eval_cfg, &self.energy, ctx.seed)
    }
}

impl Objective for SyntheticObjective {
    fn evaluate(&self, _ctx: &EvalContext, config: &Configuration) -> Evaluation {
        Evaluation {
            objectives: self.objectives(config),
            counters: ActivityCounters::default(),
            error: None,
        }
    }
}

/// Progress callbacks.
pub trait RunObserver {
    fn trial_completed(&mut self, _record: &TrialRecord, _error: Option<&str>) {}
    fn terminated(&mut self, _reason: &TerminationReason) {}
}

pub struct NoopObserver;

impl RunObserver for NoopObserver {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminationReason {
    BudgetExhausted,
    /// The last `window` optimizer trials improved neither reward nor energy.
    Stalled { window: usize },
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TerminationReason::BudgetExhausted => write!(f, "budget exhausted"),
            TerminationReason::Stalled { window } => {
                write!(f, "no reward or energy improvement in the last {window} trials")
            }
        }
    }
}

/// Incumbent gaps of one optimizer-phase trial relative to everything
/// logged before it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialDelta {
    pub index: usize,
    pub reward_delta: f64,
    pub energy_delta: f64,
}

pub fn trial_deltas(log: &TrialLog) -> Vec<TrialDelta> {
    let mut out = Vec::new();
    let mut inc: Option<Incumbent> = None;
    for r in log.records() {
        if let (Phase::Earl, Some(i)) = (r.phase, &inc) {
            out.push(TrialDelta {
                index: r.index,
                reward_delta: r.reward - i.best_reward,
                energy_delta: r.objectives.energy_normalized - i.min_energy,
            });
        }
        match &mut inc {
            Some(i) => i.observe(r),
            None => inc = Incumbent::from_records(std::slice::from_ref(r)),
        }
    }
    out
}

/// Stop once each of the last `window` optimizer trials has
/// `Δr ≤ reward_tol` and `Δf₂ ≥ -energy_tol`.
pub fn check_termination(log: &TrialLog, cfg: &TerminationConfig) -> Option<TerminationReason> {
    let deltas = trial_deltas(log);
    if cfg.window == 0 || deltas.len() < cfg.window {
        return None;
    }
    let stalled = deltas[deltas.len() - cfg.window..]
        .iter()
        .all(|d| d.reward_delta <= cfg.reward_tol && d.energy_delta >= -cfg.energy_tol);
    stalled.then_some(TerminationReason::Stalled { window: cfg.window })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub incumbent: Incumbent,
    pub best: TrialRecord,
    pub pareto: Vec<usize>,
    pub termination: TerminationReason,
    pub sobol_trials: usize,
    pub earl_trials: usize,
    pub failed_evaluations: usize,
    pub surrogate_fallbacks: usize,
}

impl RunSummary {
    pub fn from_log(log: &TrialLog, termination: TerminationReason, failed: usize, fallbacks: usize) -> Result<Self> {
        let incumbent = Incumbent::from_records(log.records()).ok_or(EarlError::EmptyLog)?;
        let count = |p: Phase| log.records().iter().filter(|r| r.phase == p).count();
        Ok(RunSummary {
            best: log.records()[incumbent.best_index].clone(),
            incumbent,
            pareto: pareto_front(log)?,
            termination,
            sobol_trials: count(Phase::Sobol),
            earl_trials: count(Phase::Earl),
            failed_evaluations: failed,
            surrogate_fallbacks: fallbacks,
        })
    }
}

pub fn trial_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(derive_seed(master_seed, streams::TRIAL), index as u64)
}

struct Runner<'a, O: Objective + ?Sized> {
    cfg: &'a RunConfig,
    objective: &'a O,
    observer: &'a mut dyn RunObserver,
    pool: Option<rayon::ThreadPool>,
    log: TrialLog,
    failed: usize,
}

impl<O: Objective + ?Sized> Runner<'_, O> {
    /// Evaluate `configs` (possibly in parallel) and commit them in order.
    fn evaluate_and_commit(&mut self, configs: &[(Configuration, Phase, SelectedBy)]) -> Result<Vec<f64>> {
        let start = self.log.len();
        let jobs: Vec<(EvalContext, Configuration)> = configs
            .iter()
            .enumerate()
            .map(|(k, (c, _, _))| {
                let index = start + k;
                (
                    EvalContext {
                        index,
                        seed: trial_seed(self.cfg.master_seed, index),
                    },
                    *c,
                )
            })
            .collect();
        let objective = self.objective;
        let timed = |(ctx, c): &(EvalContext, Configuration)| {
            let t = Instant::now();
            let e = objective.evaluate(ctx, c);
            (e, t.elapsed().as_secs_f64())
        };
        let results: Vec<(Evaluation, f64)> = match &self.pool {
            Some(pool) => pool.install(|| jobs.par_iter().map(timed).collect()),
            None => jobs.iter().map(timed).collect(),
        };
        let mut rewards = Vec::with_capacity(results.len());
        for ((ctx, _), ((config, phase, by), (eval, secs))) in jobs.iter().zip(configs.iter().zip(results)) {
            let wall = if self.cfg.record_wall_time { secs } else { 0.0 };
            let rec = self.log.push(*config, eval.objectives, *phase, *by, wall, ctx.seed)?.clone();
            if let Some(err) = &eval.error {
                self.failed += 1;
                warn!("trial {} failed: {err}", rec.index);
            }
            self.observer.trial_completed(&rec, eval.error.as_deref());
            rewards.push(rec.reward);
        }
        Ok(rewards)
    }
}

fn unit_inputs(space: &SearchSpace, log: &TrialLog) -> (Vec<[f64; 4]>, Vec<f64>) {
    log.records()
        .iter()
        .map(|r| (space.normalize(&r.config), r.reward))
        .unzip()
}

/// Run the optimizer against `objective`.
pub fn run<O: Objective + ?Sized>(
    cfg: &RunConfig,
    space: &SearchSpace,
    objective: &O,
    observer: &mut dyn RunObserver,
) -> Result<(TrialLog, RunSummary)> {
    cfg.validate()?;
    space.validate()?;
    let pool = if cfg.parallel_eval_workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.parallel_eval_workers)
                .build()
                .map_err(|e| EarlError::Config(format!("cannot start worker pool: {e}")))?,
        )
    } else {
        None
    };
    let mut runner = Runner {
        cfg,
        objective,
        observer,
        pool,
        log: TrialLog::new(cfg.reward),
        failed: 0,
    };

    let design = generate_initial_design_with(
        space,
        cfg.n_init,
        derive_seed(cfg.master_seed, streams::TRIAL),
        DesignOptions {
            scramble: cfg.scramble_init,
            ..DesignOptions::default()
        },
    )?;
    let init: Vec<_> = design.into_iter().map(|c| (c, Phase::Sobol, SelectedBy::Sobol)).collect();
    runner.evaluate_and_commit(&init)?;

    let k = cfg.acquisition.batch_size;
    let mut agent = RlAgent::new(k, cfg.rl, derive_seed(cfg.master_seed, streams::RL))?;
    let mut pending: Option<(RlState, usize, f64)> = None;
    let mut previous_model: Option<GpModel> = None;
    let mut fallbacks = 0;
    let mut reason = TerminationReason::BudgetExhausted;
    let mut iteration: u64 = 0;

    while runner.log.len() < cfg.total_trials {
        let (x, y) = unit_inputs(space, &runner.log);
        let fit_seed = derive_seed(derive_seed(cfg.master_seed, streams::GP_FIT), iteration);
        let acq_seed = derive_seed(derive_seed(cfg.master_seed, streams::ACQUISITION), iteration);
        let model = GpModel::fit(&x, &y, fit_seed).or_else(|e| {
            warn!("GP fit failed ({e}); retrying with doubled jitter");
            let opts = FitOptions {
                jitter_start: 2.0 * FitOptions::default().jitter_start,
                ..FitOptions::default()
            };
            GpModel::fit_with(&x, &y, fit_seed, &opts)
        });
        let remaining = cfg.total_trials - runner.log.len();
        match model {
            Ok(model) => {
                let batch = propose_batch(&model, space, &runner.log, &cfg.acquisition, acq_seed)?;
                let state = build_state(&batch.iter().map(|c| c.stats).collect::<Vec<_>>());
                if let Some((s, a, r)) = pending.take() {
                    agent.observe(RlTransition {
                        state: s,
                        action: a,
                        reward: r,
                        next_state: Some(state.clone()),
                    });
                }
                let (action, mode) = agent.select(&state);
                let chosen = chosen_members(&batch, action, cfg.evaluate_full_batch, remaining);
                let jobs: Vec<_> = chosen.iter().map(|&j| (batch[j].config, Phase::Earl, mode)).collect();
                let rewards = runner.evaluate_and_commit(&jobs)?;
                let pos = chosen.iter().position(|&j| j == action).expect("selected member is evaluated");
                pending = Some((state, action, rewards[pos]));
                previous_model = Some(model);
            }
            Err(e) => {
                fallbacks += 1;
                let config = fallback_config(previous_model.as_ref(), space, &runner.log, cfg, acq_seed, iteration)?;
                warn!("surrogate unavailable ({e}); evaluating fallback {config}");
                runner.evaluate_and_commit(&[(config, Phase::Earl, SelectedBy::RlGreedy)])?;
            }
        }
        iteration += 1;
        if let Some(r) = check_termination(&runner.log, &cfg.termination) {
            info!("terminating after {} trials: {r}", runner.log.len());
            reason = r;
            break;
        }
    }
    if let Some((s, a, r)) = pending.take() {
        agent.observe(RlTransition {
            state: s,
            action: a,
            reward: r,
            next_state: None,
        });
    }
    runner.observer.terminated(&reason);
    let summary = RunSummary::from_log(&runner.log, reason, runner.failed, fallbacks)?;
    Ok((runner.log, summary))
}

/// Batch members to evaluate, in batch order. In full-batch mode a batch
/// larger than the remaining budget is truncated but always keeps the
/// selected member.
fn chosen_members(batch: &[Candidate], action: usize, full: bool, remaining: usize) -> Vec<usize> {
    if !full {
        return vec![action];
    }
    let mut keep: Vec<usize> = (0..batch.len()).collect();
    while keep.len() > remaining.max(1) {
        let drop = keep.iter().rposition(|&j| j != action).expect("some non-selected member");
        keep.remove(drop);
    }
    keep
}

/// Highest pool EI under the last good surrogate, or the next Sobol point
/// when no surrogate has been fitted yet.
fn fallback_config(
    previous: Option<&GpModel>,
    space: &SearchSpace,
    log: &TrialLog,
    cfg: &RunConfig,
    seed: u64,
    iteration: u64,
) -> Result<Configuration> {
    match previous {
        Some(model) => {
            let acq = AcquisitionConfig {
                batch_size: 1,
                pattern_rounds: 0,
                ..cfg.acquisition
            };
            Ok(propose_batch(model, space, log, &acq, seed)?[0].config)
        }
        None => {
            let p = SobolStream::new(SearchSpace::DIM)?
                .nth(cfg.n_init + iteration as usize)
                .ok_or_else(|| EarlError::Config("Sobol sequence exhausted".into()))?;
            Ok(space.scale(&[p[0], p[1], p[2], p[3]]))
        }
    }
}

/// Run on an LSM task.
pub fn run_lsm(
    cfg: &RunConfig,
    space: &SearchSpace,
    data: TaskDataset,
    eval_cfg: EvalConfig,
    energy: EnergyModel,
    observer: &mut dyn RunObserver,
) -> Result<(TrialLog, RunSummary)> {
    let objective = LsmObjective { data, eval_cfg, energy };
    run(cfg, space, &objective, observer)
}

/// Uniform random search with the same trial seeding, as a baseline.
pub fn random_search<O: Objective + ?Sized>(
    total_trials: usize,
    space: &SearchSpace,
    objective: &O,
    reward: RewardParams,
    master_seed: u64,
) -> Result<TrialLog> {
    space.validate()?;
    let mut rng = rng_from(derive_seed(master_seed, streams::BASELINE));
    let mut log = TrialLog::new(reward);
    for index in 0..total_trials {
        let u: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
        let config = space.scale(&u);
        let seed = trial_seed(master_seed, index);
        let e = objective.evaluate(&EvalContext { index, seed }, &config);
        log.push(config, e.objectives, Phase::Sobol, SelectedBy::Sobol, 0.0, seed)?;
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ObjectiveValues;

    fn scripted(values: Vec<(f64, f64)>) -> impl Objective {
        move |ctx: &EvalContext, _c: &Configuration| {
            let (acc, e) = values[ctx.index.min(values.len() - 1)];
            Evaluation {
                objectives: ObjectiveValues::new(acc, e, 1.0),
                counters: ActivityCounters::default(),
                error: None,
            }
        }
    }

    fn small_cfg(total: usize, n_init: usize) -> RunConfig {
        RunConfig {
            total_trials: total,
            n_init,
            acquisition: AcquisitionConfig {
                pool_size: 256,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn budget_accounting() {
        let obj = SyntheticObjective::new(SearchSpace::default());
        let (log, summary) = run(&small_cfg(5, 4), &SearchSpace::default(), &obj, &mut NoopObserver).unwrap();
        assert_eq!(log.len(), 5);
        assert_eq!(summary.sobol_trials, 4);
        assert_eq!(summary.earl_trials, 1);
        assert_eq!(summary.termination, TerminationReason::BudgetExhausted);
    }

    #[test]
    fn constant_objective_stops_after_window() {
        let mut cfg = small_cfg(50, 6);
        cfg.termination.window = 4;
        let (log, summary) = run(&cfg, &SearchSpace::default(), &scripted(vec![(0.5, 0.2)]), &mut NoopObserver).unwrap();
        assert_eq!(log.len(), 10);
        assert_eq!(summary.termination, TerminationReason::Stalled { window: 4 });
    }

    #[test]
    fn flat_after_trial_twelve() {
        // 1-based trials 1..=12 improve, then flat
        let mut values: Vec<(f64, f64)> = (0..12).map(|i| (0.3 + 0.05 * i as f64, 0.5)).collect();
        values.push((0.3 + 0.05 * 11.0, 0.5));
        let mut cfg = small_cfg(50, 10);
        cfg.termination.window = 5;
        let (log, _) = run(&cfg, &SearchSpace::default(), &scripted(values), &mut NoopObserver).unwrap();
        assert_eq!(log.len(), 17);
    }

    #[test]
    fn improving_objective_never_stops() {
        let values: Vec<(f64, f64)> = (0..40).map(|i| (0.2 + 0.02 * i as f64, 0.5)).collect();
        let (log, summary) = run(&small_cfg(40, 10), &SearchSpace::default(), &scripted(values), &mut NoopObserver).unwrap();
        assert_eq!(log.len(), 40);
        assert_eq!(summary.termination, TerminationReason::BudgetExhausted);
    }

    #[test]
    fn termination_examples() {
        let space = SearchSpace::default();
        let mut log = TrialLog::new(RewardParams::default());
        let c = space.scale(&[0.5; 4]);
        log.push(c, ObjectiveValues::new(0.8, 0.3, 1.0), Phase::Sobol, SelectedBy::Sobol, 0.0, 0).unwrap();
        let t = TerminationConfig {
            window: 3,
            ..Default::default()
        };
        for _ in 0..2 {
            log.push(c, ObjectiveValues::new(0.8005, 0.2995, 1.0), Phase::Earl, SelectedBy::RlGreedy, 0.0, 0)
                .unwrap();
            assert_eq!(check_termination(&log, &t), None);
        }
        log.push(c, ObjectiveValues::new(0.8, 0.3, 1.0), Phase::Earl, SelectedBy::RlGreedy, 0.0, 0).unwrap();
        assert!(check_termination(&log, &t).is_some());
        // one real improvement inside the window keeps going
        log.push(c, ObjectiveValues::new(0.9, 0.3, 1.0), Phase::Earl, SelectedBy::RlGreedy, 0.0, 0).unwrap();
        assert_eq!(check_termination(&log, &t), None);
        // an energy drop beyond tolerance also counts as progress
        let mut log2 = TrialLog::new(RewardParams::new(0.0).unwrap());
        log2.push(c, ObjectiveValues::new(0.8, 0.3, 1.0), Phase::Sobol, SelectedBy::Sobol, 0.0, 0).unwrap();
        for e in [0.3, 0.3, 0.1] {
            log2.push(c, ObjectiveValues::new(0.8, e, 1.0), Phase::Earl, SelectedBy::RlGreedy, 0.0, 0).unwrap();
        }
        assert_eq!(check_termination(&log2, &t), None);
    }

    #[test]
    fn full_batch_appends_k_records() {
        let mut cfg = small_cfg(19, 6);
        cfg.evaluate_full_batch = true;
        cfg.termination.window = 100;
        let obj = SyntheticObjective::new(SearchSpace::default());
        let (log, _) = run(&cfg, &SearchSpace::default(), &obj, &mut NoopObserver).unwrap();
        // 6 + 4 + 4 + 4 + 1
        assert_eq!(log.len(), 19);
        let earl: Vec<_> = log.records().iter().filter(|r| r.phase == Phase::Earl).collect();
        assert_eq!(earl.len(), 13);
        assert!(earl
            .iter()
            .all(|r| matches!(r.selected_by, SelectedBy::RlGreedy | SelectedBy::RlRandom)));
    }

    #[test]
    fn truncation_keeps_selected_member() {
        let dummy = Candidate {
            config: SearchSpace::default().scale(&[0.5; 4]),
            point: [0.5; 4],
            stats: crate::gp::CandidateStats { mu: 0.0, sigma2: 1.0 },
            ei: 0.0,
            duplicate: false,
        };
        let batch = vec![dummy; 4];
        assert_eq!(chosen_members(&batch, 3, true, 2), vec![0, 3]);
        assert_eq!(chosen_members(&batch, 1, true, 1), vec![1]);
        assert_eq!(chosen_members(&batch, 2, false, 4), vec![2]);
        assert_eq!(chosen_members(&batch, 2, true, 9), vec![0, 1, 2, 3]);
    }

    #[test]
    fn runs_are_deterministic() {
        let obj = SyntheticObjective::new(SearchSpace::default());
        let cfg = small_cfg(16, 8);
        let (a, sa) = run(&cfg, &SearchSpace::default(), &obj, &mut NoopObserver).unwrap();
        let (b, sb) = run(&cfg, &SearchSpace::default(), &obj, &mut NoopObserver).unwrap();
        assert_eq!(a.records(), b.records());
        assert_eq!(sa, sb);
        for r in a.records() {
            let again = crate::model::compute_reward(r.objectives.accuracy, r.objectives.energy_normalized, cfg.reward)
                .unwrap();
            assert_eq!(again, r.reward);
        }
    }

    #[test]
    fn parallel_workers_do_not_change_results() {
        let obj = SyntheticObjective::new(SearchSpace::default());
        let mut cfg = small_cfg(14, 8);
        let (a, _) = run(&cfg, &SearchSpace::default(), &obj, &mut NoopObserver).unwrap();
        cfg.parallel_eval_workers = 3;
        let (b, _) = run(&cfg, &SearchSpace::default(), &obj, &mut NoopObserver).unwrap();
        assert_eq!(a.records(), b.records());
    }

    #[test]
    fn failures_are_logged_and_run_continues() {
        let obj = |ctx: &EvalContext, _c: &Configuration| Evaluation {
            objectives: if ctx.index == 2 {
                ObjectiveValues::sentinel()
            } else {
                ObjectiveValues::new(0.4 + 0.01 * ctx.index as f64, 0.3, 1.0)
            },
            counters: ActivityCounters::default(),
            error: (ctx.index == 2).then(|| "boom".to_string()),
        };
        let (log, summary) = run(&small_cfg(8, 4), &SearchSpace::default(), &obj, &mut NoopObserver).unwrap();
        assert_eq!(log.len(), 8);
        assert_eq!(summary.failed_evaluations, 1);
        assert_eq!(log.records()[2].objectives, ObjectiveValues::sentinel());
    }

    #[test]
    fn observer_sees_every_trial() {
        struct Count(usize, bool);
        impl RunObserver for Count {
            fn trial_completed(&mut self, _r: &TrialRecord, _e: Option<&str>) {
                self.0 += 1;
            }
            fn terminated(&mut self, _r: &TerminationReason) {
                self.1 = true;
            }
        }
        let mut obs = Count(0, false);
        let obj = SyntheticObjective::new(SearchSpace::default());
        let (log, _) = run(&small_cfg(7, 5), &SearchSpace::default(), &obj, &mut obs).unwrap();
        assert_eq!(obs.0, log.len());
        assert!(obs.1);
    }

    #[test]
    fn invalid_configs() {
        let obj = SyntheticObjective::new(SearchSpace::default());
        for (total, init) in [(1, 1), (10, 10), (10, 0)] {
            assert!(run(&small_cfg(total, init), &SearchSpace::default(), &obj, &mut NoopObserver).is_err());
        }
    }

    #[test]
    fn random_search_is_seeded() {
        let obj = SyntheticObjective::new(SearchSpace::default());
        let space = SearchSpace::default();
        let a = random_search(10, &space, &obj, RewardParams::default(), 3).unwrap();
        let b = random_search(10, &space, &obj, RewardParams::default(), 3).unwrap();
        assert_eq!(a.records(), b.records());
        assert!(a.records().iter().all(|r| space.contains(&r.config)));
    }
}
