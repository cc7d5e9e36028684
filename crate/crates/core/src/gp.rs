//! Gaussian-process surrogate of the scalar reward over the unit cube.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{EarlError, Result};
use crate::seed::rng_from;

pub const INPUT_DIM: usize = 4;
pub const NOISE_FLOOR: f64 = 1e-6;
pub const JITTER_START: f64 = 1e-9;
const JITTER_MAX: f64 = 1e-3;
const SQRT5: f64 = 2.236_067_977_499_79;

/// Matérn 5/2 kernel hyperparameters with one length-scale per input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub length_scales: [f64; INPUT_DIM],
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            length_scales: [1.0; INPUT_DIM],
            signal_variance: 1.0,
            noise_variance: 1e-4,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        if self.length_scales.iter().any(|l| !(*l > 0.0) || !l.is_finite())
            || !(self.signal_variance > 0.0)
            || !self.signal_variance.is_finite()
            || !(self.noise_variance >= NOISE_FLOOR)
        {
            return Err(EarlError::invalid(format!("invalid kernel parameters {self:?}")));
        }
        Ok(())
    }

    fn to_log(self) -> [f64; 6] {
        let l = self.length_scales;
        [
            l[0].ln(),
            l[1].ln(),
            l[2].ln(),
            l[3].ln(),
            self.signal_variance.ln(),
            self.noise_variance.ln(),
        ]
    }

    fn from_log(p: &[f64; 6]) -> Self {
        KernelParams {
            length_scales: [p[0].exp(), p[1].exp(), p[2].exp(), p[3].exp()],
            signal_variance: p[4].exp(),
            noise_variance: p[5].exp().max(NOISE_FLOOR),
        }
    }
}

/// `σ_f² (1 + √5 r + 5r²/3) exp(-√5 r)` with `r` the length-scaled distance.
pub fn kernel_eval(a: &[f64; INPUT_DIM], b: &[f64; INPUT_DIM], k: &KernelParams) -> f64 {
    let r2: f64 = (0..INPUT_DIM)
        .map(|i| ((a[i] - b[i]) / k.length_scales[i]).powi(2))
        .sum();
    let r = r2.sqrt();
    k.signal_variance * (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * (-SQRT5 * r).exp()
}

/// Posterior mean and variance at one point, in reward units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateStats {
    pub mu: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub sweeps: usize,
    pub line_search_iters: usize,
    /// Half-width, in log units, of the bracket searched around the
    /// current value of each coordinate.
    pub line_search_radius: f64,
    pub length_scale_bounds: (f64, f64),
    pub signal_bounds: (f64, f64),
    pub noise_bounds: (f64, f64),
    /// First diagonal jitter tried; escalates x10 up to 1e-3.
    pub jitter_start: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 64,
            sweeps: 20,
            line_search_iters: 12,
            line_search_radius: 1.0,
            length_scale_bounds: (0.05, 5.0),
            signal_bounds: (0.1, 10.0),
            noise_bounds: (1e-6, 1e-1),
            jitter_start: JITTER_START,
        }
    }
}

impl FitOptions {
    fn log_bounds(&self) -> [(f64, f64); 6] {
        let lg = |(a, b): (f64, f64)| (a.ln(), b.ln());
        let ls = lg(self.length_scale_bounds);
        [ls, ls, ls, ls, lg(self.signal_bounds), lg(self.noise_bounds)]
    }
}

/// Fitted GP with a cached Cholesky factor.
#[derive(Debug, Clone)]
pub struct GpModel {
    train_inputs: Vec<[f64; INPUT_DIM]>,
    /// Standardized targets.
    train_targets: Vec<f64>,
    kernel: KernelParams,
    target_mean: f64,
    target_std: f64,
    jitter: f64,
    chol_l: DMatrix<f64>,
    alpha: DVector<f64>,
    lml: f64,
}

fn standardize(y: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    (y.iter().map(|v| (v - mean) / std).collect(), mean, std)
}

struct Factor {
    l: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
    lml: f64,
}

fn factorize(x: &[[f64; INPUT_DIM]], y: &[f64], k: &KernelParams, jitter_start: f64) -> Option<Factor> {
    let n = x.len();
    let base = DMatrix::from_fn(n, n, |i, j| kernel_eval(&x[i], &x[j], k));
    let mut jitter = jitter_start;
    while jitter <= JITTER_MAX * (1.0 + 1e-12) {
        let mut m = base.clone();
        for i in 0..n {
            m[(i, i)] += k.noise_variance + jitter;
        }
        if let Some(chol) = m.cholesky() {
            let yv = DVector::from_column_slice(y);
            let alpha = chol.solve(&yv);
            let l = chol.unpack();
            let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
            let lml = -0.5 * yv.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
            if lml.is_finite() {
                return Some(Factor { l, alpha, jitter, lml });
            }
        }
        jitter *= 10.0;
    }
    None
}

/// Log marginal likelihood evaluator for the hyperparameter search. Reuses
/// its buffers, only forms the lower triangle, and keeps the unit-variance
/// correlation matrix while the length-scales are unchanged.
struct LmlScorer<'a> {
    n: usize,
    /// Per-dimension squared differences for pairs `j < i`, row by row.
    sq_diffs: Vec<[f64; INPUT_DIM]>,
    y: &'a [f64],
    /// Correlations for `cached_scales`, lower triangle.
    base: Vec<f64>,
    cached_scales: Option<[f64; INPUT_DIM]>,
    work: Vec<f64>,
    z: Vec<f64>,
    jitter_start: f64,
}

impl<'a> LmlScorer<'a> {
    fn new(x: &[[f64; INPUT_DIM]], y: &'a [f64], jitter_start: f64) -> Self {
        let n = x.len();
        let mut sq_diffs = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in 0..i {
                sq_diffs.push(std::array::from_fn(|d| (x[i][d] - x[j][d]).powi(2)));
            }
        }
        LmlScorer {
            n,
            sq_diffs,
            y,
            base: vec![0.0; n * n],
            cached_scales: None,
            work: vec![0.0; n * n],
            z: vec![0.0; n],
            jitter_start,
        }
    }

    fn score(&mut self, k: &KernelParams) -> f64 {
        if self.cached_scales != Some(k.length_scales) {
            self.fill_correlations(&k.length_scales);
        }
        let mut jitter = self.jitter_start;
        while jitter <= JITTER_MAX * (1.0 + 1e-12) {
            if let Some(lml) = self.try_factor(k.signal_variance, k.signal_variance + k.noise_variance + jitter) {
                return lml;
            }
            jitter *= 10.0;
        }
        f64::NEG_INFINITY
    }

    fn fill_correlations(&mut self, scales: &[f64; INPUT_DIM]) {
        let n = self.n;
        let inv: [f64; INPUT_DIM] = std::array::from_fn(|d| 1.0 / (scales[d] * scales[d]));
        let mut pair = 0;
        for i in 0..n {
            for j in 0..i {
                let d = &self.sq_diffs[pair];
                pair += 1;
                let r2 = d[0] * inv[0] + d[1] * inv[1] + d[2] * inv[2] + d[3] * inv[3];
                let r = r2.sqrt();
                self.base[i * n + j] = (1.0 + SQRT5 * r + 5.0 * r2 / 3.0) * (-SQRT5 * r).exp();
            }
        }
        self.cached_scales = Some(*scales);
    }

    fn try_factor(&mut self, signal: f64, diag: f64) -> Option<f64> {
        let n = self.n;
        let l = &mut self.work;
        let mut log_det = 0.0;
        for j in 0..n {
            let (head, tail) = l.split_at_mut(j * n);
            let row_j = &mut tail[..n];
            for c in 0..j {
                row_j[c] = signal * self.base[j * n + c];
            }
            for c in 0..j {
                let row_c = &head[c * n..c * n + c];
                let dot: f64 = row_c.iter().zip(&row_j[..c]).map(|(a, b)| a * b).sum();
                row_j[c] = (row_j[c] - dot) / head[c * n + c];
            }
            let s = diag - row_j[..j].iter().map(|v| v * v).sum::<f64>();
            if !(s > 0.0) {
                return None;
            }
            row_j[j] = s.sqrt();
            log_det += row_j[j].ln();
        }
        // z = L^-1 y; y' K^-1 y = |z|^2
        let mut quad = 0.0;
        let z = &mut self.z;
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let dot: f64 = row.iter().zip(&z[..i]).map(|(a, b)| a * b).sum();
            z[i] = (self.y[i] - dot) / l[i * n + i];
            quad += z[i] * z[i];
        }
        let lml = -0.5 * quad - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        lml.is_finite().then_some(lml)
    }
}

fn check_inputs(inputs: &[[f64; INPUT_DIM]], targets: &[f64], min: usize) -> Result<()> {
    if inputs.len() != targets.len() {
        return Err(EarlError::invalid(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if inputs.len() < min {
        return Err(EarlError::invalid(format!(
            "GP needs at least {min} observations, got {}",
            inputs.len()
        )));
    }
    let tol = 1e-9;
    if inputs.iter().flatten().any(|v| !(*v >= -tol && *v <= 1.0 + tol)) {
        return Err(EarlError::invalid("GP inputs must lie in the unit cube"));
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(EarlError::invalid("GP targets must be finite"));
    }
    Ok(())
}

/// Golden-section maximization of `f` on `[lo, hi]`.
fn golden_max(mut lo: f64, mut hi: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

impl GpModel {
    /// Fit kernel hyperparameters by maximizing the log marginal likelihood
    /// of the standardized targets: log-uniform multi-starts, then
    /// coordinate-wise golden-section refinement of the best start.
    pub fn fit(inputs: &[[f64; INPUT_DIM]], rewards: &[f64], seed: u64) -> Result<Self> {
        Self::fit_with(inputs, rewards, seed, &FitOptions::default())
    }

    pub fn fit_with(
        inputs: &[[f64; INPUT_DIM]],
        rewards: &[f64],
        seed: u64,
        opts: &FitOptions,
    ) -> Result<Self> {
        check_inputs(inputs, rewards, 2)?;
        let (y, _, _) = standardize(rewards);
        let bounds = opts.log_bounds();
        let mut scorer = LmlScorer::new(inputs, &y, opts.jitter_start);
        let mut score = |p: &[f64; 6]| scorer.score(&KernelParams::from_log(p));
        let clamp = |mut p: [f64; 6]| {
            for (v, (lo, hi)) in p.iter_mut().zip(bounds) {
                *v = v.clamp(lo, hi);
            }
            p
        };
        let mut best = clamp(KernelParams::default().to_log());
        let mut best_score = score(&best);
        let mut rng = rng_from(seed);
        for _ in 0..opts.restarts {
            let mut p = [0.0; 6];
            for (v, (lo, hi)) in p.iter_mut().zip(bounds) {
                *v = rng.random_range(lo..=hi);
            }
            let s = score(&p);
            if s > best_score {
                best = p;
                best_score = s;
            }
        }
        for _ in 0..opts.sweeps {
            let before = best_score;
            for c in 0..6 {
                let (lo, hi) = bounds[c];
                let (lo, hi) = (lo.max(best[c] - opts.line_search_radius), hi.min(best[c] + opts.line_search_radius));
                let mut probe = best;
                let (arg, val) = golden_max(lo, hi, opts.line_search_iters, |v| {
                    probe[c] = v;
                    score(&probe)
                });
                if val > best_score {
                    best[c] = arg;
                    best_score = val;
                }
            }
            if best_score - before <= 1e-7 * before.abs().max(1.0) {
                break;
            }
        }
        if !best_score.is_finite() {
            return Err(EarlError::SurrogateFailure(
                "kernel matrix could not be factorized for any hyperparameters".into(),
            ));
        }
        Self::condition(inputs, rewards, KernelParams::from_log(&best), opts.jitter_start)
    }

    /// Condition on the data with fixed hyperparameters.
    pub fn from_params(inputs: &[[f64; INPUT_DIM]], rewards: &[f64], kernel: KernelParams) -> Result<Self> {
        Self::condition(inputs, rewards, kernel, JITTER_START)
    }

    fn condition(
        inputs: &[[f64; INPUT_DIM]],
        rewards: &[f64],
        kernel: KernelParams,
        jitter_start: f64,
    ) -> Result<Self> {
        check_inputs(inputs, rewards, 1)?;
        kernel.validate()?;
        let (y, mean, std) = standardize(rewards);
        let f = factorize(inputs, &y, &kernel, jitter_start).ok_or_else(|| {
            EarlError::SurrogateFailure(format!(
                "Cholesky failed with jitter up to {JITTER_MAX:e}"
            ))
        })?;
        Ok(GpModel {
            train_inputs: inputs.to_vec(),
            train_targets: y,
            kernel,
            target_mean: mean,
            target_std: std,
            jitter: f.jitter,
            chol_l: f.l,
            alpha: f.alpha,
            lml: f.lml,
        })
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn train_inputs(&self) -> &[[f64; INPUT_DIM]] {
        &self.train_inputs
    }

    pub fn train_targets(&self) -> &[f64] {
        &self.train_targets
    }

    pub fn target_mean(&self) -> f64 {
        self.target_mean
    }

    pub fn target_std(&self) -> f64 {
        self.target_std
    }

    /// Diagonal jitter that made the kernel matrix factorizable.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.train_inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_inputs.is_empty()
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    /// Posterior of the latent reward (no observation noise) at `x`.
    pub fn predict(&self, x: &[f64; INPUT_DIM]) -> CandidateStats {
        let n = self.len();
        let ks = DVector::from_fn(n, |i, _| kernel_eval(&self.train_inputs[i], x, &self.kernel));
        let mu = ks.dot(&self.alpha);
        let v = self
            .chol_l
            .solve_lower_triangular(&ks)
            .expect("Cholesky factor has a positive diagonal");
        let var = (self.kernel.signal_variance - v.norm_squared()).max(0.0);
        CandidateStats {
            mu: self.target_mean + self.target_std * mu,
            sigma2: var * self.target_std * self.target_std,
        }
    }
}

pub fn predict(model: &GpModel, x: &[f64; INPUT_DIM]) -> CandidateStats {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_problem(seed: u64, n: usize) -> (Vec<[f64; 4]>, Vec<f64>) {
        let mut rng = rng_from(seed);
        let x: Vec<[f64; 4]> = (0..n).map(|_| std::array::from_fn(|_| rng.random::<f64>())).collect();
        let y = x.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[2] - 0.5 * p[3]).collect();
        (x, y)
    }

    #[test]
    fn kernel_examples() {
        let k = KernelParams {
            signal_variance: 2.5,
            ..Default::default()
        };
        let a = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(kernel_eval(&a, &a, &k), 2.5);
        let unit = KernelParams {
            length_scales: [1.0; 4],
            signal_variance: 1.0,
            noise_variance: 1e-6,
        };
        let v = kernel_eval(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0], &unit);
        assert!((v - 0.523_994_108_831_820_3).abs() < 1e-12);
        let mut prev = 1.0;
        for i in 1..50 {
            let v = kernel_eval(&[0.0; 4], &[i as f64 * 0.2, 0.0, 0.0, 0.0], &unit);
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn duplicate_inputs_fit() {
        let x = vec![[0.5; 4], [0.5; 4], [0.1, 0.9, 0.3, 0.2]];
        let gp = GpModel::fit(&x, &[1.0, 0.0, 0.3], 1).unwrap();
        assert!(gp.kernel().noise_variance >= NOISE_FLOOR);
        assert!(gp.predict(&[0.5; 4]).mu.is_finite());
    }

    #[test]
    fn constant_targets() {
        let (x, _) = random_problem(2, 6);
        let gp = GpModel::fit(&x, &[0.7; 6], 3).unwrap();
        for p in [[0.0; 4], [0.3, 0.9, 0.1, 0.5], [1.0; 4]] {
            assert!((gp.predict(&p).mu - 0.7).abs() < 1e-6);
        }
    }

    #[test]
    fn fit_beats_default_on_sinusoid() {
        let x: Vec<[f64; 4]> = (0..5).map(|i| [i as f64 / 4.0, 0.5, 0.5, 0.5]).collect();
        let y: Vec<f64> = x.iter().map(|p| (2.0 * std::f64::consts::PI * p[0]).sin()).collect();
        let fitted = GpModel::fit(&x, &y, 4).unwrap();
        let default = GpModel::from_params(&x, &y, KernelParams::default()).unwrap();
        assert!(fitted.log_marginal_likelihood() >= default.log_marginal_likelihood());
    }

    #[test]
    fn near_interpolation() {
        let (x, y) = random_problem(5, 8);
        let k = KernelParams {
            length_scales: [0.5; 4],
            signal_variance: 1.0,
            noise_variance: 1e-6,
        };
        let gp = GpModel::from_params(&x, &y, k).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let s = gp.predict(xi);
            assert!((s.mu - yi).abs() < 1e-3);
            assert!(s.sigma2 <= 1e-3);
        }
    }

    #[test]
    fn prior_reversion_far_away() {
        let x = vec![[0.0; 4], [0.01, 0.0, 0.0, 0.0], [0.0, 0.02, 0.0, 0.0]];
        let y = vec![1.0, 2.0, 4.0];
        let k = KernelParams {
            length_scales: [0.05; 4],
            signal_variance: 1.5,
            noise_variance: 1e-4,
        };
        let gp = GpModel::from_params(&x, &y, k).unwrap();
        let s = gp.predict(&[1.0; 4]);
        assert!((s.mu - gp.target_mean()).abs() < 1e-9);
        let prior = 1.5 * gp.target_std().powi(2);
        assert!((s.sigma2 - prior).abs() < 1e-9);
    }

    fn oracle(x: &[[f64; 4]], y: &[f64], gp: &GpModel, p: &[f64; 4]) -> (f64, f64) {
        // independent dense solve
        let k = gp.kernel();
        let matern = |a: &[f64; 4], b: &[f64; 4]| {
            let mut r2 = 0.0;
            for i in 0..4 {
                let d = (a[i] - b[i]) / k.length_scales[i];
                r2 += d * d;
            }
            let r = r2.sqrt();
            k.signal_variance * (1.0 + 5f64.sqrt() * r + 5.0 / 3.0 * r * r) * (-(5f64.sqrt()) * r).exp()
        };
        let n = x.len();
        let mean = y.iter().sum::<f64>() / n as f64;
        let sd = (y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64).sqrt();
        let ys = DVector::from_fn(n, |i, _| (y[i] - mean) / sd);
        let km = DMatrix::from_fn(n, n, |i, j| {
            matern(&x[i], &x[j]) + if i == j { k.noise_variance + gp.jitter() } else { 0.0 }
        });
        let ks = DVector::from_fn(n, |i, _| matern(&x[i], p));
        let lu = km.lu();
        let a = lu.solve(&ys).unwrap();
        let b = lu.solve(&ks).unwrap();
        let mu = mean + sd * ks.dot(&a);
        let var = (k.signal_variance - ks.dot(&b)).max(0.0) * sd * sd;
        (mu, var)
    }

    #[test]
    fn matches_dense_oracle() {
        for seed in 0..20 {
            let n = 2 + (seed as usize % 9);
            let (x, y) = random_problem(seed, n);
            let gp = GpModel::fit(&x, &y, seed).unwrap();
            let mut rng = rng_from(seed + 100);
            for _ in 0..10 {
                let p: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
                let (mu, var) = oracle(&x, &y, &gp, &p);
                let s = gp.predict(&p);
                assert!((s.mu - mu).abs() < 1e-8, "seed {seed}");
                assert!((s.sigma2 - var).abs() < 1e-8, "seed {seed}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GpModel::fit(&[[0.5; 4]], &[1.0], 1).is_err());
        assert!(GpModel::fit(&[[0.5; 4], [1.5, 0.0, 0.0, 0.0]], &[1.0, 2.0], 1).is_err());
        assert!(GpModel::from_params(&[[0.5; 4]], &[1.0, 2.0], KernelParams::default()).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let (x, y) = random_problem(9, 7);
        let a = GpModel::fit(&x, &y, 5).unwrap();
        let b = GpModel::fit(&x, &y, 5).unwrap();
        assert_eq!(a.kernel(), b.kernel());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn variance_bounded_by_prior(seed in 0u64..1000, n in 1usize..9, q in proptest::array::uniform4(0.0f64..1.0)) {
            let (x, y) = random_problem(seed, n);
            let k = KernelParams { length_scales: [0.3, 0.6, 1.0, 2.0], signal_variance: 1.3, noise_variance: 1e-3 };
            let gp = GpModel::from_params(&x, &y, k).unwrap();
            let s = gp.predict(&q);
            prop_assert!(s.sigma2 >= 0.0);
            prop_assert!(s.sigma2 <= (k.signal_variance + k.noise_variance) * gp.target_std().powi(2) + 1e-9);
        }

        #[test]
        fn more_data_never_raises_variance(seed in 0u64..1000, n in 1usize..8, q in proptest::array::uniform4(0.0f64..1.0)) {
            let (x, y) = random_problem(seed, n + 1);
            let k = KernelParams { length_scales: [0.4; 4], signal_variance: 1.0, noise_variance: 1e-4 };
            // the two fits standardize differently, so compare latent variances
            let small = GpModel::from_params(&x[..n], &y[..n], k).unwrap();
            let big = GpModel::from_params(&x, &y, k).unwrap();
            let vs = small.predict(&q).sigma2 / small.target_std().powi(2);
            let vb = big.predict(&q).sigma2 / big.target_std().powi(2);
            prop_assert!(vb <= vs + 1e-9);
        }
    }
}
