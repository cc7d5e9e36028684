use earl_core::controller::{random_search, run, run_lsm, NoopObserver, RunConfig};
use earl_core::evaluator::{
    evaluate, raw_feature_ridge_accuracy, synth_task, EnergyModel, EvalConfig, ReadoutKind, SyntheticObjective,
    SynthOptions, TaskKind,
};
use earl_core::sobol::generate_initial_design;
use earl_core::{compute_reward, pareto_front, Phase, SearchSpace, SelectedBy, TrialLog};

fn small_task(kind: TaskKind) -> earl_core::evaluator::TaskDataset {
    synth_task(
        kind,
        SynthOptions {
            sequences: 40,
            steps: 15,
            snr_db: 10.0,
        },
        3,
    )
    .unwrap()
}

#[test]
fn run_invariants_on_synthetic_objective() {
    let space = SearchSpace::default();
    let cfg = RunConfig {
        total_trials: 24,
        n_init: 8,
        ..Default::default()
    };
    let (log, summary) = run(&cfg, &space, &SyntheticObjective::new(space), &mut NoopObserver).unwrap();
    assert!(log.len() <= cfg.total_trials && log.len() >= cfg.n_init);
    for r in log.records() {
        assert!(space.contains(&r.config));
        let again = compute_reward(r.objectives.accuracy, r.objectives.energy_normalized, cfg.reward).unwrap();
        assert_eq!(again, r.reward);
        match r.phase {
            Phase::Sobol => assert_eq!(r.selected_by, SelectedBy::Sobol),
            Phase::Earl => assert!(matches!(r.selected_by, SelectedBy::RlGreedy | SelectedBy::RlRandom)),
        }
    }
    assert_eq!(summary.sobol_trials, 8);
    assert_eq!(summary.pareto, pareto_front(&log).unwrap());
    assert_eq!(summary.best.reward, summary.incumbent.best_reward);
}

#[test]
fn optimizer_beats_random_on_synthetic_objective() {
    let space = SearchSpace::default();
    let objective = SyntheticObjective::new(space);
    let mut wins = 0;
    for seed in 0..5 {
        let cfg = RunConfig {
            total_trials: 30,
            n_init: 10,
            master_seed: seed,
            ..Default::default()
        };
        let (_, s) = run(&cfg, &space, &objective, &mut NoopObserver).unwrap();
        let rs = random_search(30, &space, &objective, cfg.reward, seed).unwrap();
        let best = rs.records().iter().map(|r| r.reward).fold(f64::NEG_INFINITY, f64::max);
        if s.incumbent.best_reward >= best {
            wins += 1;
        }
    }
    assert!(wins >= 4, "won {wins}/5");
}

#[test]
fn log_csv_round_trip_after_run() {
    let space = SearchSpace::default();
    let cfg = RunConfig {
        total_trials: 12,
        n_init: 6,
        ..Default::default()
    };
    let (log, _) = run(&cfg, &space, &SyntheticObjective::new(space), &mut NoopObserver).unwrap();
    let mut buf = Vec::new();
    log.write_csv(&mut buf).unwrap();
    let back = TrialLog::read_csv(buf.as_slice(), cfg.reward).unwrap();
    assert_eq!(back, log);
}

#[test]
fn lsm_run_with_ridge_readout() {
    let data = small_task(TaskKind::FreqDiscrim);
    let space = SearchSpace::default();
    let energy = EnergyModel::default_for(&space, data.steps()).unwrap();
    let eval_cfg = EvalConfig {
        readout: ReadoutKind::Ridge,
        ..Default::default()
    };
    let cfg = RunConfig {
        total_trials: 8,
        n_init: 5,
        ..Default::default()
    };
    let (log, summary) = run_lsm(&cfg, &space, data, eval_cfg, energy, &mut NoopObserver).unwrap();
    assert_eq!(log.len(), 8);
    assert_eq!(summary.failed_evaluations, 0);
    assert!(log.records().iter().all(|r| (0.0..=1.0).contains(&r.objectives.accuracy)));
}

#[test]
fn gru_readout_learns_every_task() {
    let space = SearchSpace::default();
    let config = generate_initial_design(&space, 1, 0).unwrap()[0];
    let eval_cfg = EvalConfig {
        train_spec: earl_core::readout::TrainSpec {
            epochs: 30,
            learning_rate: 1e-2,
            ..Default::default()
        },
        hidden_dim: 16,
        ..Default::default()
    };
    for kind in [TaskKind::FreqDiscrim, TaskKind::AmplitudeMod] {
        let data = small_task(kind);
        let energy = EnergyModel::default_for(&space, data.steps()).unwrap();
        let e = evaluate(&config, &data, &eval_cfg, &energy, 11);
        assert!(e.error.is_none(), "{kind:?}: {:?}", e.error);
        assert!(e.objectives.accuracy >= 0.5, "{kind:?}: {}", e.objectives.accuracy);
        assert!(e.objectives.energy_pj_per_sample > 0.0);
    }
}

#[test]
fn synthetic_tasks_are_learnable_from_raw_features() {
    for kind in [TaskKind::FreqDiscrim, TaskKind::NoisyParity, TaskKind::AmplitudeMod] {
        let data = synth_task(kind, SynthOptions::default(), 1).unwrap();
        let acc = raw_feature_ridge_accuracy(&data, 1e-2).unwrap();
        assert!(acc > 0.5, "{kind:?}: {acc}");
    }
}
