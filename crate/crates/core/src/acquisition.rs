//! Expected improvement and batch proposal.

use log::warn;
use rand_distr::{Distribution, Normal};

use crate::error::{EarlError, Result};
use crate::gp::{CandidateStats, GpModel};
use crate::model::{Configuration, Incumbent, SearchSpace, TrialLog};
use crate::seed::{derive_seed, rng_from};
use crate::sobol::SobolStream;
use crate::stats::{normal_cdf, normal_pdf};

/// `E[max(r - r*, 0)]` for `r ~ N(mu, sigma2)`; zero when the variance is.
pub fn expected_improvement(stats: &CandidateStats, r_star: f64) -> f64 {
    let sigma = stats.sigma2.max(0.0).sqrt();
    if sigma == 0.0 {
        return 0.0;
    }
    let diff = stats.mu - r_star;
    let z = diff / sigma;
    (diff * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionConfig {
    pub batch_size: usize,
    pub pool_size: usize,
    /// L∞ distance in the unit cube below which two points are duplicates.
    pub dup_tolerance: f64,
    /// Per-dimension standard deviation of duplicate jitter, unit-cube units.
    pub jitter_sigma: f64,
    pub jitter_retries: usize,
    pub pattern_step: f64,
    pub pattern_min_step: f64,
    pub pattern_rounds: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig {
            batch_size: 4,
            pool_size: 4096,
            dup_tolerance: 1e-3,
            jitter_sigma: 0.01,
            jitter_retries: 10,
            pattern_step: 0.05,
            pattern_min_step: 1e-3,
            pattern_rounds: 20,
        }
    }
}

impl AcquisitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(EarlError::Config("batch size K must be at least 1".into()));
        }
        if self.pool_size < self.batch_size {
            return Err(EarlError::Config(format!(
                "pool size {} is smaller than batch size {}",
                self.pool_size, self.batch_size
            )));
        }
        if !(self.dup_tolerance > 0.0) {
            return Err(EarlError::Config("duplicate tolerance must be positive".into()));
        }
        if !(self.jitter_sigma > 0.0) {
            return Err(EarlError::Config("jitter sigma must be positive".into()));
        }
        Ok(())
    }
}

/// One proposed configuration with its posterior at the configuration
/// actually returned (after integer rounding).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub config: Configuration,
    /// Unit-cube coordinates of `config`.
    pub point: [f64; 4],
    pub stats: CandidateStats,
    pub ei: f64,
    /// Still within the duplicate tolerance after all jitter retries.
    pub duplicate: bool,
}

struct Scorer<'a> {
    model: &'a GpModel,
    space: &'a SearchSpace,
    r_star: f64,
}

impl Scorer<'_> {
    fn candidate(&self, u: &[f64; 4]) -> Candidate {
        let clipped = u.map(|v| v.clamp(0.0, 1.0));
        let config = self.space.scale(&clipped);
        let point = self.space.normalize(&config);
        let stats = self.model.predict(&point);
        Candidate {
            config,
            point,
            stats,
            ei: expected_improvement(&stats, self.r_star),
            duplicate: false,
        }
    }

    /// Coordinate pattern search, halving the step when no move improves.
    fn refine(&self, start: Candidate, cfg: &AcquisitionConfig) -> Candidate {
        let mut best = start;
        let mut step = cfg.pattern_step;
        for _ in 0..cfg.pattern_rounds {
            if step < cfg.pattern_min_step {
                break;
            }
            let mut moved = false;
            for d in 0..4 {
                for sign in [1.0, -1.0] {
                    let mut u = best.point;
                    u[d] += sign * step;
                    let c = self.candidate(&u);
                    if c.ei > best.ei {
                        best = c;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best
    }
}

fn linf(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

/// Propose `batch_size` candidates: score a fresh scrambled Sobol pool by
/// EI against the log's best reward, refine the top ones by pattern search,
/// then perturb duplicates.
pub fn propose_batch(
    model: &GpModel,
    space: &SearchSpace,
    log: &TrialLog,
    cfg: &AcquisitionConfig,
    seed: u64,
) -> Result<Vec<Candidate>> {
    cfg.validate()?;
    let r_star = Incumbent::from_records(log.records())
        .ok_or(EarlError::EmptyLog)?
        .best_reward;
    let scorer = Scorer { model, space, r_star };
    let mut stream = SobolStream::scrambled(SearchSpace::DIM, derive_seed(seed, 0))?;
    let mut pool: Vec<Candidate> = (0..cfg.pool_size)
        .map(|_| {
            let p = stream.next_point();
            scorer.candidate(&[p[0], p[1], p[2], p[3]])
        })
        .collect();
    // stable: equal EI keeps pool order
    pool.sort_by(|a, b| b.ei.total_cmp(&a.ei));
    let refined: Vec<Candidate> = pool[..cfg.batch_size]
        .iter()
        .map(|c| scorer.refine(*c, cfg))
        .collect();
    let evaluated: Vec<[f64; 4]> = log.records().iter().map(|r| space.normalize(&r.config)).collect();
    Ok(resolve_with(&scorer, refined, &evaluated, cfg, derive_seed(seed, 1)))
}

/// Jitter every candidate lying within `dup_tolerance` of an evaluated
/// point or an earlier candidate. Stats are recomputed at the moved point.
pub fn resolve_duplicates(
    model: &GpModel,
    space: &SearchSpace,
    r_star: f64,
    candidates: Vec<Candidate>,
    evaluated: &[[f64; 4]],
    cfg: &AcquisitionConfig,
    seed: u64,
) -> Vec<Candidate> {
    let scorer = Scorer { model, space, r_star };
    resolve_with(&scorer, candidates, evaluated, cfg, seed)
}

fn resolve_with(
    scorer: &Scorer<'_>,
    candidates: Vec<Candidate>,
    evaluated: &[[f64; 4]],
    cfg: &AcquisitionConfig,
    seed: u64,
) -> Vec<Candidate> {
    let mut rng = rng_from(seed);
    let noise = Normal::new(0.0, cfg.jitter_sigma).expect("jitter sigma validated positive");
    let mut accepted: Vec<Candidate> = Vec::with_capacity(candidates.len());
    for cand in candidates {
        let clashes = |c: &Candidate, acc: &[Candidate]| {
            evaluated.iter().any(|e| linf(e, &c.point) < cfg.dup_tolerance)
                || acc.iter().any(|a| linf(&a.point, &c.point) < cfg.dup_tolerance)
        };
        let mut current = cand;
        let mut attempts = 0;
        while clashes(&current, &accepted) && attempts < cfg.jitter_retries {
            let u = cand.point.map(|v| v + noise.sample(&mut rng));
            current = scorer.candidate(&u);
            attempts += 1;
        }
        if clashes(&current, &accepted) {
            warn!("candidate {} is still a duplicate after {attempts} jitter attempts", current.config);
            current.duplicate = true;
        }
        accepted.push(current);
    }
    accepted
}
