//! Search space, configurations, objectives and the trial log.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::error::{EarlError, Result};

/// Inclusive integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntRange {
    pub lo: usize,
    pub hi: usize,
}

/// Closed real interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealRange {
    pub lo: f64,
    pub hi: f64,
}

impl RealRange {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Four-dimensional hyperparameter box: reservoir size, connection
/// probability, spectral radius and leak rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace {
    pub size_range: IntRange,
    pub conn_range: RealRange,
    pub spectral_range: RealRange,
    pub leak_range: RealRange,
}

impl Default for SearchSpace {
    /// The bounds used across all experiments: size 100..1000, connectivity
    /// 0.2..0.7, spectral radius 0.6..1.1, leak rate 0.1..0.4.
    fn default() -> Self {
        SearchSpace {
            size_range: IntRange { lo: 100, hi: 1000 },
            conn_range: RealRange { lo: 0.2, hi: 0.7 },
            spectral_range: RealRange { lo: 0.6, hi: 1.1 },
            leak_range: RealRange { lo: 0.1, hi: 0.4 },
        }
    }
}

impl SearchSpace {
    pub const DIM: usize = 4;

    pub fn new(
        size_range: IntRange,
        conn_range: RealRange,
        spectral_range: RealRange,
        leak_range: RealRange,
    ) -> Result<Self> {
        let space = SearchSpace {
            size_range,
            conn_range,
            spectral_range,
            leak_range,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.size_range;
        if s.lo == 0 || s.lo >= s.hi {
            return Err(EarlError::Config(format!(
                "size range must satisfy 0 < lower < upper, got [{}, {}]",
                s.lo, s.hi
            )));
        }
        let check = |name: &str, r: RealRange, unit: bool| -> Result<()> {
            if !(r.lo.is_finite() && r.hi.is_finite()) || r.lo >= r.hi {
                return Err(EarlError::Config(format!(
                    "{name} range must satisfy lower < upper, got [{}, {}]",
                    r.lo, r.hi
                )));
            }
            if unit && (r.lo <= 0.0 || r.hi > 1.0) {
                return Err(EarlError::Config(format!(
                    "{name} range must lie in (0, 1], got [{}, {}]",
                    r.lo, r.hi
                )));
            }
            Ok(())
        };
        check("connectivity", self.conn_range, true)?;
        check("spectral radius", self.spectral_range, false)?;
        check("leak rate", self.leak_range, true)?;
        Ok(())
    }

    pub fn contains(&self, c: &Configuration) -> bool {
        c.reservoir_size >= self.size_range.lo
            && c.reservoir_size <= self.size_range.hi
            && self.conn_range.contains(c.connectivity)
            && self.spectral_range.contains(c.spectral_radius)
            && self.leak_range.contains(c.leak_rate)
    }

    pub fn check(&self, c: &Configuration) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(EarlError::invalid(format!("configuration {c} outside the search space")))
        }
    }

    /// Map a unit-cube point onto the box. The size dimension is rounded to
    /// the nearest integer and clamped; the real dimensions are a plain
    /// linear map.
    pub fn scale(&self, u: &[f64; 4]) -> Configuration {
        let s = self.size_range;
        let raw = s.lo as f64 + u[0] * (s.hi - s.lo) as f64;
        let size = (raw.round().max(s.lo as f64).min(s.hi as f64)) as usize;
        let lin = |r: RealRange, v: f64| r.lo + v * r.width();
        Configuration {
            reservoir_size: size,
            connectivity: lin(self.conn_range, u[1]),
            spectral_radius: lin(self.spectral_range, u[2]),
            leak_rate: lin(self.leak_range, u[3]),
        }
    }

    /// Inverse of [`SearchSpace::scale`], treating the size dimension as continuous.
    pub fn normalize(&self, c: &Configuration) -> [f64; 4] {
        let s = self.size_range;
        let lin = |r: RealRange, v: f64| (v - r.lo) / r.width();
        [
            (c.reservoir_size as f64 - s.lo as f64) / (s.hi - s.lo) as f64,
            lin(self.conn_range, c.connectivity),
            lin(self.spectral_range, c.spectral_radius),
            lin(self.leak_range, c.leak_rate),
        ]
    }
}

/// One point in the search space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Configuration {
    pub reservoir_size: usize,
    pub connectivity: f64,
    pub spectral_radius: f64,
    pub leak_rate: f64,
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(size={}, conn={}, spectral={}, leak={})",
            self.reservoir_size, self.connectivity, self.spectral_radius, self.leak_rate
        )
    }
}

/// Accuracy and energy of one evaluated configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValues {
    pub accuracy: f64,
    pub energy_pj_per_sample: f64,
    pub energy_normalized: f64,
}

impl ObjectiveValues {
    /// Build objectives from raw energy, normalizing by `reference_energy`
    /// and clipping into [0, 1].
    pub fn new(accuracy: f64, energy_pj_per_sample: f64, reference_energy: f64) -> Self {
        let norm = if reference_energy > 0.0 {
            (energy_pj_per_sample / reference_energy).clamp(0.0, 1.0)
        } else {
            1.0
        };
        ObjectiveValues {
            accuracy,
            energy_pj_per_sample,
            energy_normalized: norm,
        }
    }

    /// Objectives recorded for an evaluation that failed.
    pub fn sentinel() -> Self {
        ObjectiveValues {
            accuracy: 0.0,
            energy_pj_per_sample: 0.0,
            energy_normalized: 1.0,
        }
    }
}

/// Weight of the energy term in the scalarized reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardParams {
    pub energy_weight: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams { energy_weight: 0.5 }
    }
}

impl RewardParams {
    pub fn new(energy_weight: f64) -> Result<Self> {
        if !energy_weight.is_finite() || energy_weight < 0.0 {
            return Err(EarlError::invalid(format!(
                "energy weight must be finite and non-negative, got {energy_weight}"
            )));
        }
        Ok(RewardParams { energy_weight })
    }
}

/// Scalarized reward `accuracy - energy_weight * energy_norm`.
pub fn compute_reward(acc: f64, energy_norm: f64, params: RewardParams) -> Result<f64> {
    if !acc.is_finite() || !energy_norm.is_finite() || !params.energy_weight.is_finite() {
        return Err(EarlError::invalid(format!(
            "non-finite reward input (acc={acc}, energy={energy_norm}, weight={})",
            params.energy_weight
        )));
    }
    Ok(acc - params.energy_weight * energy_norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Sobol,
    Earl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectedBy {
    Sobol,
    RlGreedy,
    RlRandom,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Sobol => "sobol",
            Phase::Earl => "earl",
        }
    }
}

impl SelectedBy {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectedBy::Sobol => "sobol",
            SelectedBy::RlGreedy => "rl_greedy",
            SelectedBy::RlRandom => "rl_random",
        }
    }
}

impl FromStr for Phase {
    type Err = EarlError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sobol" => Ok(Phase::Sobol),
            "earl" => Ok(Phase::Earl),
            other => Err(EarlError::Schema(format!("unknown phase '{other}'"))),
        }
    }
}

impl FromStr for SelectedBy {
    type Err = EarlError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sobol" => Ok(SelectedBy::Sobol),
            "rl_greedy" => Ok(SelectedBy::RlGreedy),
            "rl_random" => Ok(SelectedBy::RlRandom),
            other => Err(EarlError::Schema(format!("unknown selector '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub config: Configuration,
    pub objectives: ObjectiveValues,
    pub reward: f64,
    pub phase: Phase,
    pub selected_by: SelectedBy,
    pub wall_time_s: f64,
    pub seed: u64,
}

/// Exact header of the trial CSV.
pub const TRIAL_CSV_HEADER: [&str; 13] = [
    "trial_index",
    "phase",
    "selected_by",
    "reservoir_size",
    "connectivity",
    "spectral_radius",
    "leak_rate",
    "accuracy",
    "energy_pj_per_sample",
    "energy_normalized",
    "reward",
    "wall_time_s",
    "seed",
];

/// Append-only sequence of evaluated trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    records: Vec<TrialRecord>,
    reward_params: RewardParams,
}

impl TrialLog {
    pub fn new(reward_params: RewardParams) -> Self {
        TrialLog {
            records: Vec::new(),
            reward_params,
        }
    }

    /// Rebuild a log from records, checking that indices are contiguous.
    pub fn from_records(reward_params: RewardParams, records: Vec<TrialRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.index != i {
                return Err(EarlError::Schema(format!(
                    "trial indices must run 0..n without gaps; row {i} has index {}",
                    r.index
                )));
            }
        }
        Ok(TrialLog {
            records,
            reward_params,
        })
    }

    pub fn reward_params(&self) -> RewardParams {
        self.reward_params
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TrialRecord> {
        self.records.last()
    }

    /// Append a new trial; the reward is computed from the objectives.
    pub fn push(
        &mut self,
        config: Configuration,
        objectives: ObjectiveValues,
        phase: Phase,
        selected_by: SelectedBy,
        wall_time_s: f64,
        seed: u64,
    ) -> Result<&TrialRecord> {
        let reward = compute_reward(
            objectives.accuracy,
            objectives.energy_normalized,
            self.reward_params,
        )?;
        let index = self.records.len();
        self.records.push(TrialRecord {
            index,
            config,
            objectives,
            reward,
            phase,
            selected_by,
            wall_time_s,
            seed,
        });
        Ok(&self.records[index])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trial_rows(out, self.records.iter())
    }

    pub fn read_csv<R: Read>(input: R, reward_params: RewardParams) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let headers = reader.headers()?.clone();
        let missing: Vec<&str> = TRIAL_CSV_HEADER
            .iter()
            .copied()
            .filter(|h| !headers.iter().any(|c| c == *h))
            .collect();
        if !missing.is_empty() {
            return Err(EarlError::Schema(format!(
                "missing columns: {}",
                missing.join(", ")
            )));
        }
        let col = |name: &str| headers.iter().position(|c| c == name).unwrap();
        let cols: Vec<usize> = TRIAL_CSV_HEADER.iter().map(|h| col(h)).collect();
        let mut records = Vec::new();
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| rec.get(cols[k]).unwrap_or("");
            let num = |k: usize| -> Result<f64> {
                field(k).parse::<f64>().map_err(|_| {
                    EarlError::Schema(format!(
                        "row {row}: column {} is not a number: '{}'",
                        TRIAL_CSV_HEADER[k],
                        field(k)
                    ))
                })
            };
            let int = |k: usize| -> Result<u64> {
                field(k).parse::<u64>().map_err(|_| {
                    EarlError::Schema(format!(
                        "row {row}: column {} is not an integer: '{}'",
                        TRIAL_CSV_HEADER[k],
                        field(k)
                    ))
                })
            };
            records.push(TrialRecord {
                index: int(0)? as usize,
                phase: field(1).parse()?,
                selected_by: field(2).parse()?,
                config: Configuration {
                    reservoir_size: int(3)? as usize,
                    connectivity: num(4)?,
                    spectral_radius: num(5)?,
                    leak_rate: num(6)?,
                },
                objectives: ObjectiveValues {
                    accuracy: num(7)?,
                    energy_pj_per_sample: num(8)?,
                    energy_normalized: num(9)?,
                },
                reward: num(10)?,
                wall_time_s: num(11)?,
                seed: int(12)?,
            });
        }
        TrialLog::from_records(reward_params, records)
    }
}

/// Write trial rows with the standard header. Used for both the full log
/// and Pareto subsets.
pub fn write_trial_rows<'a, W: Write>(
    out: W,
    rows: impl Iterator<Item = &'a TrialRecord>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRIAL_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.index.to_string(),
            r.phase.as_str().to_string(),
            r.selected_by.as_str().to_string(),
            r.config.reservoir_size.to_string(),
            r.config.connectivity.to_string(),
            r.config.spectral_radius.to_string(),
            r.config.leak_rate.to_string(),
            r.objectives.accuracy.to_string(),
            r.objectives.energy_pj_per_sample.to_string(),
            r.objectives.energy_normalized.to_string(),
            r.reward.to_string(),
            r.wall_time_s.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Best reward and lowest normalized energy seen so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incumbent {
    pub best_reward: f64,
    pub min_energy: f64,
    pub best_index: usize,
    pub min_energy_index: usize,
}

impl Incumbent {
    pub fn from_records(records: &[TrialRecord]) -> Option<Incumbent> {
        let first = records.first()?;
        let mut inc = Incumbent {
            best_reward: first.reward,
            min_energy: first.objectives.energy_normalized,
            best_index: first.index,
            min_energy_index: first.index,
        };
        for r in &records[1..] {
            inc.observe(r);
        }
        Some(inc)
    }

    /// Fold one more record in; strict comparisons keep the earliest trial on ties.
    pub fn observe(&mut self, r: &TrialRecord) {
        if r.reward > self.best_reward {
            self.best_reward = r.reward;
            self.best_index = r.index;
        }
        if r.objectives.energy_normalized < self.min_energy {
            self.min_energy = r.objectives.energy_normalized;
            self.min_energy_index = r.index;
        }
    }
}

pub fn update_incumbent(log: &TrialLog) -> Result<Incumbent> {
    Incumbent::from_records(log.records()).ok_or(EarlError::EmptyLog)
}

/// `a` strictly dominates `b` when it is at least as accurate and at most as
/// costly, and strictly better in one of the two.
pub fn dominates(a: &ObjectiveValues, b: &ObjectiveValues) -> bool {
    a.accuracy >= b.accuracy
        && a.energy_pj_per_sample <= b.energy_pj_per_sample
        && (a.accuracy > b.accuracy || a.energy_pj_per_sample < b.energy_pj_per_sample)
}

/// Indices of the non-dominated trials under (maximize accuracy, minimize raw
/// pJ/sample), sorted by descending accuracy. Duplicated objective pairs are
/// all kept.
pub fn pareto_front(log: &TrialLog) -> Result<Vec<usize>> {
    if log.is_empty() {
        return Err(EarlError::EmptyLog);
    }
    Ok(pareto_indices(log.records()))
}

pub(crate) fn pareto_indices(records: &[TrialRecord]) -> Vec<usize> {
    let mut order: Vec<&TrialRecord> = records.iter().collect();
    order.sort_by(|a, b| {
        b.objectives
            .accuracy
            .total_cmp(&a.objectives.accuracy)
            .then(
                a.objectives
                    .energy_pj_per_sample
                    .total_cmp(&b.objectives.energy_pj_per_sample),
            )
            .then(a.index.cmp(&b.index))
    });

    // Sweep accuracy groups from best to worst; a group's cheapest members
    // survive only if they beat every more accurate point on energy.
    let mut front = Vec::new();
    let mut best_energy_above = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        let acc = order[i].objectives.accuracy;
        let group_min = order[i].objectives.energy_pj_per_sample;
        let mut j = i;
        while j < order.len() && order[j].objectives.accuracy == acc {
            j += 1;
        }
        if group_min < best_energy_above {
            front.extend(
                order[i..j]
                    .iter()
                    .filter(|r| r.objectives.energy_pj_per_sample == group_min)
                    .map(|r| r.index),
            );
            best_energy_above = group_min;
        }
        i = j;
    }
    front
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> Configuration {
        Configuration {
            reservoir_size: 500,
            connectivity: 0.4,
            spectral_radius: 0.9,
            leak_rate: 0.2,
        }
    }

    fn log_from(points: &[(f64, f64, f64)]) -> TrialLog {
        let mut log = TrialLog::new(RewardParams::default());
        for &(acc, raw, norm) in points {
            log.push(
                cfg(),
                ObjectiveValues {
                    accuracy: acc,
                    energy_pj_per_sample: raw,
                    energy_normalized: norm,
                },
                Phase::Sobol,
                SelectedBy::Sobol,
                0.0,
                0,
            )
            .unwrap();
        }
        log
    }

    fn brute_front(records: &[TrialRecord]) -> Vec<usize> {
        let mut out: Vec<usize> = records
            .iter()
            .filter(|b| !records.iter().any(|a| dominates(&a.objectives, &b.objectives)))
            .map(|r| r.index)
            .collect();
        out.sort();
        out
    }

    #[test]
    fn reward_examples() {
        let r = |a, e, w| compute_reward(a, e, RewardParams { energy_weight: w }).unwrap();
        assert_eq!(r(0.9, 0.2, 0.0), 0.9);
        assert!((r(0.9, 0.2, 0.5) - 0.8).abs() < 1e-15);
        assert_eq!(r(0.0, 1.0, 1.0), -1.0);
    }

    #[test]
    fn reward_rejects_non_finite() {
        let p = RewardParams::default();
        assert!(compute_reward(f64::NAN, 0.1, p).is_err());
        assert!(compute_reward(0.5, f64::INFINITY, p).is_err());
        assert!(RewardParams::new(-1.0).is_err());
    }

    #[test]
    fn incumbent_ties_go_to_first() {
        let log = log_from(&[(0.5, 1.0, 0.0), (0.8, 1.0, 0.0), (0.8, 1.0, 0.0)]);
        assert_eq!(update_incumbent(&log).unwrap().best_index, 1);
    }

    #[test]
    fn incumbent_singleton() {
        let mut log = TrialLog::new(RewardParams { energy_weight: 0.0 });
        log.push(
            cfg(),
            ObjectiveValues {
                accuracy: 0.3,
                energy_pj_per_sample: 1.0,
                energy_normalized: 0.1,
            },
            Phase::Sobol,
            SelectedBy::Sobol,
            0.0,
            0,
        )
        .unwrap();
        let inc = update_incumbent(&log).unwrap();
        assert_eq!(
            inc,
            Incumbent {
                best_reward: 0.3,
                min_energy: 0.1,
                best_index: 0,
                min_energy_index: 0
            }
        );
    }

    #[test]
    fn incumbent_objectives_split_across_trials() {
        let mut log = TrialLog::new(RewardParams { energy_weight: 0.0 });
        for (acc, e) in [(0.2, 0.05), (0.9, 0.5)] {
            log.push(
                cfg(),
                ObjectiveValues {
                    accuracy: acc,
                    energy_pj_per_sample: e,
                    energy_normalized: e,
                },
                Phase::Sobol,
                SelectedBy::Sobol,
                0.0,
                0,
            )
            .unwrap();
        }
        let inc = update_incumbent(&log).unwrap();
        assert_eq!((inc.best_index, inc.min_energy_index), (1, 0));
    }

    #[test]
    fn empty_log_errors() {
        let log = TrialLog::new(RewardParams::default());
        assert!(matches!(update_incumbent(&log), Err(EarlError::EmptyLog)));
        assert!(matches!(pareto_front(&log), Err(EarlError::EmptyLog)));
    }

    #[test]
    fn pareto_example() {
        let log = log_from(&[(0.9, 0.2, 0.0), (0.95, 0.3, 0.0), (0.9, 0.25, 0.0), (0.8, 0.1, 0.0)]);
        assert_eq!(pareto_front(&log).unwrap(), vec![1, 0, 3]);
        assert_eq!(brute_front(log.records()), vec![0, 1, 3]);
    }

    #[test]
    fn pareto_keeps_duplicates() {
        let log = log_from(&[(0.9, 0.2, 0.0), (0.9, 0.2, 0.0)]);
        assert_eq!(pareto_front(&log).unwrap(), vec![0, 1]);
        let single = log_from(&[(0.4, 3.0, 0.0)]);
        assert_eq!(pareto_front(&single).unwrap(), vec![0]);
    }

    #[test]
    fn scale_table_bounds() {
        let space = SearchSpace::default();
        let mid = space.scale(&[0.5; 4]);
        assert_eq!(mid.reservoir_size, 550);
        assert!((mid.connectivity - 0.45).abs() < 1e-12);
        assert!((mid.spectral_radius - 0.85).abs() < 1e-12);
        assert!((mid.leak_rate - 0.25).abs() < 1e-12);
        let lo = space.scale(&[0.0; 4]);
        assert_eq!(
            (lo.reservoir_size, lo.connectivity, lo.spectral_radius, lo.leak_rate),
            (100, 0.2, 0.6, 0.1)
        );
        let hi = space.scale(&[1.0; 4]);
        assert_eq!(hi.reservoir_size, 1000);
        assert!((hi.connectivity - 0.7).abs() < 1e-12);
        assert!((hi.spectral_radius - 1.1).abs() < 1e-12);
        assert!((hi.leak_rate - 0.4).abs() < 1e-12);
    }

    #[test]
    fn invalid_spaces_rejected() {
        let d = SearchSpace::default();
        let mut s = d;
        s.size_range = IntRange { lo: 10, hi: 10 };
        assert!(s.validate().is_err());
        let mut s = d;
        s.conn_range = RealRange { lo: 0.0, hi: 0.5 };
        assert!(s.validate().is_err());
        let mut s = d;
        s.leak_range = RealRange { lo: 0.2, hi: 1.5 };
        assert!(s.validate().is_err());
        assert!(d.validate().is_ok());
    }

    #[test]
    fn csv_header_and_roundtrip() {
        let log = log_from(&[(0.9, 0.2, 0.01), (0.5, 12.5, 0.3)]);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "trial_index,phase,selected_by,reservoir_size,connectivity,spectral_radius,leak_rate,accuracy,energy_pj_per_sample,energy_normalized,reward,wall_time_s,seed\n"
        ));
        let back = TrialLog::read_csv(buf.as_slice(), log.reward_params()).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn csv_missing_columns_listed() {
        let err = TrialLog::read_csv("trial_index,phase\n0,sobol\n".as_bytes(), RewardParams::default())
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("accuracy") && msg.contains("seed"), "{msg}");
    }

    fn objectives() -> impl Strategy<Value = (f64, f64)> {
        // Coarse grids make ties and duplicates common.
        (0u32..20, 0u32..20).prop_map(|(a, e)| (a as f64 / 20.0, e as f64 / 4.0))
    }

    proptest! {
        #[test]
        fn front_matches_brute_force(pts in prop::collection::vec(objectives(), 1..120)) {
            let pts: Vec<(f64, f64, f64)> = pts.into_iter().map(|(a, e)| (a, e, 0.0)).collect();
            let log = log_from(&pts);
            let mut got = pareto_front(&log).unwrap();
            // descending accuracy
            for w in got.windows(2) {
                let (a, b) = (&log.records()[w[0]], &log.records()[w[1]]);
                prop_assert!(a.objectives.accuracy >= b.objectives.accuracy);
            }
            got.sort();
            prop_assert_eq!(got, brute_front(log.records()));
        }

        #[test]
        fn reward_monotone(acc in 0.0f64..1.0, e in 0.0f64..1.0, da in 0.0f64..0.5, de in 0.0f64..0.5, w in 0.0f64..3.0) {
            let p = RewardParams { energy_weight: w };
            let base = compute_reward(acc, e, p).unwrap();
            prop_assert!(compute_reward(acc + da, e, p).unwrap() >= base);
            prop_assert!(compute_reward(acc, e + de, p).unwrap() <= base);
        }

        #[test]
        fn incumbent_non_decreasing(rs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..50)) {
            let mut log = TrialLog::new(RewardParams::default());
            let mut prev = f64::NEG_INFINITY;
            for (a, e) in rs {
                log.push(cfg(), ObjectiveValues { accuracy: a, energy_pj_per_sample: e, energy_normalized: e },
                    Phase::Sobol, SelectedBy::Sobol, 0.0, 0).unwrap();
                let inc = update_incumbent(&log).unwrap();
                prop_assert!(inc.best_reward >= prev);
                prev = inc.best_reward;
            }
        }

        #[test]
        fn accuracy_shift_preserves_argmax(rs in prop::collection::vec((0.0f64..0.5, 0.0f64..1.0), 1..40), c in 0.0f64..0.5) {
            let build = |shift: f64| {
                let mut log = TrialLog::new(RewardParams::default());
                for &(a, e) in &rs {
                    log.push(cfg(), ObjectiveValues { accuracy: a + shift, energy_pj_per_sample: e, energy_normalized: e },
                        Phase::Sobol, SelectedBy::Sobol, 0.0, 0).unwrap();
                }
                log
            };
            let (base, shifted) = (build(0.0), build(c));
            for (x, y) in base.records().iter().zip(shifted.records()) {
                prop_assert!((y.reward - x.reward - c).abs() < 1e-12);
            }
            prop_assert_eq!(update_incumbent(&base).unwrap().best_index, update_incumbent(&shifted).unwrap().best_index);
        }
    }
}
