//! Batch-member selection by ε-greedy one-step Q-learning.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{EarlError, Result};
use crate::gp::CandidateStats;
use crate::model::SelectedBy;
use crate::optim::{AdamW, AdamWConfig};
use crate::readout::argmax;
use crate::seed::rng_from;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlConfig {
    pub epsilon_start: f64,
    pub kappa: f64,
    pub epsilon_min: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub capacity: usize,
    pub batch_size: usize,
    /// Learn and sync the target network every this many stored transitions.
    pub update_period: u64,
    pub hidden: usize,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            epsilon_start: 1.0,
            kappa: 0.95,
            epsilon_min: 0.05,
            gamma: 0.9,
            learning_rate: 1e-3,
            capacity: 256,
            batch_size: 16,
            update_period: 5,
            hidden: 32,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(EarlError::Config(m.into()));
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_min) {
            return bad("epsilon values must lie in [0, 1]");
        }
        if self.epsilon_min > self.epsilon_start {
            return bad("epsilon floor exceeds the starting epsilon");
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return bad("epsilon decay kappa must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("discount gamma must lie in [0, 1]");
        }
        if !(self.learning_rate >= 0.0) {
            return bad("RL learning rate must be non-negative");
        }
        if self.capacity == 0 || self.batch_size == 0 || self.update_period == 0 || self.hidden == 0 {
            return bad("replay capacity, mini-batch, update period and hidden width must be positive");
        }
        Ok(())
    }
}

/// Min–max normalized `[μ₁, σ₁², …, μ_K, σ_K²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RlState {
    pub features: Vec<f64>,
}

fn min_max(v: &[f64]) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > 0.0) {
        return vec![0.5; v.len()];
    }
    v.iter().map(|x| ((x - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
}

pub fn build_state(stats: &[CandidateStats]) -> RlState {
    let mu = min_max(&stats.iter().map(|s| s.mu).collect::<Vec<_>>());
    let s2 = min_max(&stats.iter().map(|s| s.sigma2).collect::<Vec<_>>());
    RlState {
        features: mu.into_iter().zip(s2).flat_map(|(a, b)| [a, b]).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub epsilon: f64,
    pub kappa: f64,
    pub epsilon_min: f64,
}

impl EpsilonSchedule {
    pub fn new(epsilon: f64, kappa: f64, epsilon_min: f64) -> Self {
        EpsilonSchedule {
            epsilon: epsilon.max(epsilon_min),
            kappa,
            epsilon_min,
        }
    }

    pub fn decay(&mut self) {
        self.epsilon = (self.kappa * self.epsilon).max(self.epsilon_min);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlTransition {
    pub state: RlState,
    pub action: usize,
    pub reward: f64,
    /// `None` marks a terminal transition (no bootstrap).
    pub next_state: Option<RlState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<RlTransition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity: capacity.max(1),
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, tr: RlTransition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(tr);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &RlTransition> {
        self.entries.iter()
    }

    fn sample(&self, n: usize, rng: &mut impl Rng) -> Vec<&RlTransition> {
        sample(rng, self.entries.len(), n)
            .into_iter()
            .map(|i| &self.entries[i])
            .collect()
    }
}

/// `in → h → h → out` perceptron with tanh hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    /// `W1 | b1 | W2 | b2 | W3 | b3`, weights row-major.
    pub params: Vec<f64>,
}

impl Mlp {
    pub fn new(inputs: usize, hidden: usize, outputs: usize, seed: u64) -> Self {
        let mut rng = rng_from(seed);
        let mut params = Vec::new();
        for (fan_in, fan_out) in [(inputs, hidden), (hidden, hidden), (hidden, outputs)] {
            let bound = 1.0 / (fan_in as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-bound..=bound)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Mlp {
            inputs,
            hidden,
            outputs,
            params,
        }
    }

    fn offsets(&self) -> [usize; 6] {
        let (i, h, o) = (self.inputs, self.hidden, self.outputs);
        let w1 = 0;
        let b1 = w1 + h * i;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let w3 = b2 + h;
        let b3 = w3 + o * h;
        [w1, b1, w2, b2, w3, b3]
    }

    fn layer(&self, w: usize, b: usize, rows: usize, x: &[f64], act: bool) -> Vec<f64> {
        let cols = x.len();
        (0..rows)
            .map(|r| {
                let z = self.params[b + r]
                    + self.params[w + r * cols..w + (r + 1) * cols]
                        .iter()
                        .zip(x)
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                if act {
                    z.tanh()
                } else {
                    z
                }
            })
            .collect()
    }

    fn forward_all(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let [w1, b1, w2, b2, w3, b3] = self.offsets();
        let h1 = self.layer(w1, b1, self.hidden, x, true);
        let h2 = self.layer(w2, b2, self.hidden, &h1, true);
        let q = self.layer(w3, b3, self.outputs, &h2, false);
        (h1, h2, q)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_all(x).2
    }

    /// Accumulate `coef * ∂q_a/∂θ` into `grad`.
    fn accumulate_output_grad(&self, x: &[f64], a: usize, coef: f64, grad: &mut [f64]) {
        let [w1, b1, w2, b2, w3, b3] = self.offsets();
        let h = self.hidden;
        let (h1, h2, _) = self.forward_all(x);
        grad[b3 + a] += coef;
        let mut da2 = vec![0.0; h];
        for j in 0..h {
            grad[w3 + a * h + j] += coef * h2[j];
            da2[j] = coef * self.params[w3 + a * h + j] * (1.0 - h2[j] * h2[j]);
        }
        let mut da1 = vec![0.0; h];
        for r in 0..h {
            grad[b2 + r] += da2[r];
            for c in 0..h {
                grad[w2 + r * h + c] += da2[r] * h1[c];
                da1[c] += self.params[w2 + r * h + c] * da2[r];
            }
        }
        for (c, d) in da1.iter_mut().enumerate() {
            *d *= 1.0 - h1[c] * h1[c];
        }
        for r in 0..h {
            grad[b1 + r] += da1[r];
            for c in 0..self.inputs {
                grad[w1 + r * self.inputs + c] += da1[r] * x[c];
            }
        }
    }
}

/// Main and target action-value networks.
#[derive(Debug, Clone)]
pub struct QNetwork {
    pub main: Mlp,
    pub target: Mlp,
    pub gamma: f64,
    pub update_period: u64,
    steps: u64,
    opt: AdamW,
}

impl QNetwork {
    pub fn new(actions: usize, cfg: &RlConfig, seed: u64) -> Self {
        let main = Mlp::new(2 * actions, cfg.hidden, actions, seed);
        let opt = AdamW::new(
            AdamWConfig {
                learning_rate: cfg.learning_rate,
                weight_decay: 0.0,
                ..AdamWConfig::default()
            },
            main.params.len(),
        );
        QNetwork {
            target: main.clone(),
            main,
            gamma: cfg.gamma,
            update_period: cfg.update_period,
            steps: 0,
            opt,
        }
    }

    pub fn actions(&self) -> usize {
        self.main.outputs
    }

    /// Transitions stored so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn q_values(&self, s: &RlState) -> Vec<f64> {
        self.main.forward(&s.features)
    }

    pub fn target_values(&self, s: &RlState) -> Vec<f64> {
        self.target.forward(&s.features)
    }

    pub fn sync_target(&mut self) {
        self.target.params.clone_from(&self.main.params);
    }

    /// One gradient step on the mean of `δ²/2` over `batch`; returns mean |δ|.
    pub fn learn(&mut self, batch: &[&RlTransition]) -> f64 {
        let mut grad = vec![0.0; self.main.params.len()];
        let mut abs_td = 0.0;
        let n = batch.len() as f64;
        for tr in batch {
            let bootstrap = match &tr.next_state {
                Some(next) => {
                    let qs = self.target_values(next);
                    self.gamma * qs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                }
                None => 0.0,
            };
            let delta = tr.reward + bootstrap - self.q_values(&tr.state)[tr.action];
            abs_td += delta.abs();
            self.main
                .accumulate_output_grad(&tr.state.features, tr.action, -delta / n, &mut grad);
        }
        self.opt.step(&mut self.main.params, &grad);
        abs_td / n
    }
}

/// ε-greedy choice; ties go to the lowest index. Decays ε afterwards.
pub fn select_action(
    q: &QNetwork,
    s: &RlState,
    sched: &mut EpsilonSchedule,
    rng: &mut impl Rng,
) -> (usize, SelectedBy) {
    let explore = rng.random::<f64>() < sched.epsilon;
    let out = if explore {
        (rng.random_range(0..q.actions()), SelectedBy::RlRandom)
    } else {
        (argmax(&q.q_values(s)), SelectedBy::RlGreedy)
    };
    sched.decay();
    out
}

/// Store `tr`; every `update_period` stores (once the buffer holds a full
/// mini-batch) learn on a uniform sample and sync the target network.
pub fn store_and_learn(
    q: &mut QNetwork,
    buf: &mut ReplayBuffer,
    tr: RlTransition,
    batch: usize,
    rng: &mut impl Rng,
) -> Option<f64> {
    buf.push(tr);
    q.steps += 1;
    if !q.steps.is_multiple_of(q.update_period) || buf.len() < batch {
        return None;
    }
    let sampled = buf.sample(batch, rng);
    let td = q.learn(&sampled);
    q.sync_target();
    Some(td)
}

/// Network, replay buffer, schedule and RNG bundled for the controller.
#[derive(Debug, Clone)]
pub struct RlAgent {
    pub config: RlConfig,
    pub q: QNetwork,
    pub buffer: ReplayBuffer,
    pub schedule: EpsilonSchedule,
    rng: ChaCha8Rng,
}

impl RlAgent {
    pub fn new(actions: usize, config: RlConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(RlAgent {
            q: QNetwork::new(actions, &config, crate::seed::derive_seed(seed, 0)),
            buffer: ReplayBuffer::new(config.capacity),
            schedule: EpsilonSchedule::new(config.epsilon_start, config.kappa, config.epsilon_min),
            rng: rng_from(crate::seed::derive_seed(seed, 1)),
            config,
        })
    }

    pub fn select(&mut self, s: &RlState) -> (usize, SelectedBy) {
        select_action(&self.q, s, &mut self.schedule, &mut self.rng)
    }

    pub fn observe(&mut self, tr: RlTransition) -> Option<f64> {
        store_and_learn(&mut self.q, &mut self.buffer, tr, self.config.batch_size, &mut self.rng)
    }
}
