//! Fixed recurrent reservoir.
//!
//! The state update is the leaky rate-based rule
//! `x_t = (1 - leak) x_{t-1} + leak * tanh(W x_{t-1} + W_in u_t)`.
//! Spikes for the energy model are read off the state with a magnitude
//! threshold. A forward-Euler LIF integrator is provided for spike-encoding
//! input streams.

use log::warn;
use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;

use crate::error::{EarlError, Result};
use crate::model::Configuration;
use crate::seed::{derive_seed, rng_from};

/// Compressed sparse row square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(EarlError::invalid(format!(
                "dense matrix has {} entries, expected {}",
                dense.len(),
                n * n
            )));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = dense[i * n + j];
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                d[i * self.n + self.cols[k]] = self.vals[k];
            }
        }
        d
    }

    /// `out = A x`
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    fn scale(&mut self, factor: f64) {
        for v in &mut self.vals {
            *v *= factor;
        }
    }

    /// Number of nonzeros per column: how many neurons each neuron feeds.
    fn column_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n];
        for &c in &self.cols {
            counts[c] += 1;
        }
        counts
    }
}

const KRYLOV_DIM: usize = 60;
const MAX_RESTARTS: usize = 12;
const RESTART_TOL: f64 = 1e-6;

/// Estimate of the spectral radius by explicitly restarted Arnoldi.
///
/// Random reservoir matrices follow the circular law, so their outermost
/// eigenvalues are tightly clustered and often complex; plain power iteration
/// does not separate them. Each cycle builds a Krylov basis of dimension
/// `min(n, 60)`, takes the largest-modulus Ritz value of the Hessenberg
/// projection, and restarts from the real and imaginary parts of its Ritz
/// vector until the modulus stops changing.
pub fn estimate_spectral_radius(m: &SparseMatrix, seed: u64) -> f64 {
    let n = m.dim();
    if n == 0 || m.nnz() == 0 {
        return 0.0;
    }
    let mut rng = rng_from(seed);
    let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    if normalize(&mut start) == 0.0 {
        return 0.0;
    }
    let dim = KRYLOV_DIM.min(n);
    let mut last = f64::NAN;
    for _ in 0..MAX_RESTARTS {
        let (basis, h) = arnoldi(m, &start, dim);
        let k = basis.len();
        if k == 0 {
            return 0.0;
        }
        let hk = h.view((0, 0), (k, k)).into_owned();
        let ritz = hk.complex_eigenvalues();
        let theta = ritz
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap();
        let rho = theta.norm();
        // an invariant subspace was found: the Ritz values are exact
        if k < dim || (rho - last).abs() <= RESTART_TOL * rho {
            return rho;
        }
        last = rho;
        match ritz_vector(&hk, theta, &basis) {
            Some(v) => start = v,
            None => return rho,
        }
    }
    last
}

/// Arnoldi with modified Gram-Schmidt and one reorthogonalization pass.
/// Returns the orthonormal basis and the `(k+1) x k` Hessenberg matrix.
fn arnoldi(m: &SparseMatrix, start: &[f64], dim: usize) -> (Vec<Vec<f64>>, DMatrix<f64>) {
    let n = m.dim();
    let mut h = DMatrix::<f64>::zeros(dim + 1, dim);
    let mut basis: Vec<Vec<f64>> = vec![start.to_vec()];
    let mut w = vec![0.0; n];
    for j in 0..dim {
        m.matvec(&basis[j], &mut w);
        let w_norm0 = norm(&w);
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                h[(i, j)] += c;
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let beta = norm(&w);
        if beta <= 1e-12 * w_norm0.max(1e-300) {
            basis.truncate(j + 1);
            return (basis, h);
        }
        if j + 1 < dim {
            h[(j + 1, j)] = beta;
            basis.push(w.iter().map(|x| x / beta).collect());
        }
    }
    (basis, h)
}

/// Real restart vector `Re(y) + Im(y)` lifted back to the full space, where
/// `y` is the eigenvector of `h` for `theta`, found by inverse iteration.
fn ritz_vector(h: &DMatrix<f64>, theta: Complex<f64>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = h.nrows();
    let shift = theta * Complex::new(1.0 + 1e-10, 1e-10) + Complex::new(1e-14, 0.0);
    let a = DMatrix::<Complex<f64>>::from_fn(k, k, |i, j| {
        let v = Complex::new(h[(i, j)], 0.0);
        if i == j {
            v - shift
        } else {
            v
        }
    });
    let lu = a.lu();
    let mut y = DVector::<Complex<f64>>::from_element(k, Complex::new(1.0, 0.0));
    for _ in 0..3 {
        y = lu.solve(&y)?;
        let s = y.norm();
        if !(s.is_finite() && s > 0.0) {
            return None;
        }
        y /= Complex::new(s, 0.0);
    }
    let n = basis[0].len();
    let mut v = vec![0.0; n];
    for (q, c) in basis.iter().zip(y.iter()) {
        let coef = c.re + c.im;
        for (vi, qi) in v.iter_mut().zip(q) {
            *vi += coef * qi;
        }
    }
    (normalize(&mut v) > 0.0).then_some(v)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Fixed reservoir matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirWeights {
    pub w_rec: SparseMatrix,
    /// Row-major `n_neurons x n_inputs`.
    pub w_in: Vec<f64>,
    pub n_neurons: usize,
    pub n_inputs: usize,
    pub target_spectral_radius: f64,
    pub connectivity: f64,
    pub input_scaling: f64,
    out_degree: Vec<u64>,
}

pub const DEFAULT_INPUT_SCALING: f64 = 1.0;

impl ReservoirWeights {
    /// Sample a reservoir for `config`. Recurrent entries are nonzero with
    /// probability `connectivity` and uniform in [-1, 1]; the matrix is then
    /// rescaled to the target spectral radius.
    pub fn build(config: &Configuration, n_inputs: usize, seed: u64) -> Result<Self> {
        Self::build_scaled(config, n_inputs, seed, DEFAULT_INPUT_SCALING)
    }

    pub fn build_scaled(
        config: &Configuration,
        n_inputs: usize,
        seed: u64,
        input_scaling: f64,
    ) -> Result<Self> {
        if n_inputs == 0 {
            return Err(EarlError::invalid("reservoir needs at least one input"));
        }
        let n = config.reservoir_size;
        if n == 0 {
            return Err(EarlError::DegenerateReservoir("zero neurons".into()));
        }
        let mut rng = rng_from(derive_seed(seed, 0));
        let p = config.connectivity;
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for _ in 0..n {
            for j in 0..n {
                if rng.random::<f64>() < p {
                    cols.push(j);
                    vals.push(rng.random_range(-1.0..=1.0));
                }
            }
            row_ptr.push(cols.len());
        }
        let w_rec = SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
        };
        let mut in_rng = rng_from(derive_seed(seed, 1));
        let w_in = (0..n * n_inputs)
            .map(|_| in_rng.random_range(-1.0..=1.0) * input_scaling)
            .collect();
        Self::from_parts(
            w_rec,
            w_in,
            n_inputs,
            config.spectral_radius,
            p,
            input_scaling,
            derive_seed(seed, 2),
        )
    }

    /// Assemble weights from explicit matrices, rescaling `w_rec` to
    /// `target_spectral_radius`.
    pub fn from_parts(
        mut w_rec: SparseMatrix,
        w_in: Vec<f64>,
        n_inputs: usize,
        target_spectral_radius: f64,
        connectivity: f64,
        input_scaling: f64,
        power_seed: u64,
    ) -> Result<Self> {
        let n = w_rec.dim();
        if w_in.len() != n * n_inputs {
            return Err(EarlError::invalid(format!(
                "input matrix has {} entries, expected {}x{}",
                w_in.len(),
                n,
                n_inputs
            )));
        }
        if w_rec.nnz() == 0 {
            return Err(EarlError::DegenerateReservoir(format!(
                "no recurrent connections sampled for {n} neurons"
            )));
        }
        let rho = estimate_spectral_radius(&w_rec, power_seed);
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(EarlError::DegenerateReservoir(format!(
                "estimated spectral radius is {rho}"
            )));
        }
        w_rec.scale(target_spectral_radius / rho);
        let out_degree = w_rec.column_counts();
        Ok(ReservoirWeights {
            w_rec,
            w_in,
            n_neurons: n,
            n_inputs,
            target_spectral_radius,
            connectivity,
            input_scaling,
            out_degree,
        })
    }

    pub fn out_degree(&self) -> &[u64] {
        &self.out_degree
    }

    pub fn nonzero_fraction(&self) -> f64 {
        self.w_rec.nnz() as f64 / (self.n_neurons * self.n_neurons) as f64
    }

    /// `pre = W x + W_in u`
    fn preactivation(&self, x: &[f64], u: &[f64], pre: &mut [f64]) {
        self.w_rec.matvec(x, pre);
        let d = self.n_inputs;
        for (i, p) in pre.iter_mut().enumerate() {
            let row = &self.w_in[i * d..(i + 1) * d];
            *p += row.iter().zip(u).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

pub fn build_weights(config: &Configuration, n_inputs: usize, seed: u64) -> Result<ReservoirWeights> {
    ReservoirWeights::build(config, n_inputs, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub x: Vec<f64>,
    pub leak_rate: f64,
    pub t: usize,
}

impl ReservoirState {
    pub fn zeros(n: usize, leak_rate: f64) -> Self {
        ReservoirState {
            x: vec![0.0; n],
            leak_rate,
            t: 0,
        }
    }

    /// One leaky update, returning the new state.
    pub fn step(&self, weights: &ReservoirWeights, u: &[f64]) -> Result<ReservoirState> {
        let mut next = self.clone();
        let mut scratch = vec![0.0; self.x.len()];
        next.advance(weights, u, &mut scratch)?;
        Ok(next)
    }

    fn advance(&mut self, weights: &ReservoirWeights, u: &[f64], pre: &mut [f64]) -> Result<()> {
        if u.len() != weights.n_inputs || self.x.len() != weights.n_neurons {
            return Err(EarlError::invalid(format!(
                "state/input dims ({}, {}) do not match reservoir ({}, {})",
                self.x.len(),
                u.len(),
                weights.n_neurons,
                weights.n_inputs
            )));
        }
        weights.preactivation(&self.x, u, pre);
        let a = self.leak_rate;
        for (x, p) in self.x.iter_mut().zip(pre.iter()) {
            *x = (1.0 - a) * *x + a * p.tanh();
        }
        self.t += 1;
        Ok(())
    }
}

pub fn step(state: &ReservoirState, weights: &ReservoirWeights, u: &[f64]) -> Result<ReservoirState> {
    state.step(weights, u)
}

/// Activity tallies feeding the energy estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ActivityCounters {
    pub spikes: u64,
    pub synaptic_events: u64,
    pub neuron_steps: u64,
}

impl ActivityCounters {
    pub fn add(&mut self, other: &ActivityCounters) {
        self.spikes += other.spikes;
        self.synaptic_events += other.synaptic_events;
        self.neuron_steps += other.neuron_steps;
    }
}

/// Run a whole input sequence from the zero state, returning the `T x N`
/// state trajectory. A neuron spikes at step `t` when `|x_i,t|` exceeds
/// `spike_threshold`; each spike costs one synaptic event per outgoing
/// connection.
pub fn run_sequence(
    weights: &ReservoirWeights,
    leak: f64,
    inputs: &[Vec<f64>],
    counters: &mut ActivityCounters,
    spike_threshold: f64,
) -> Result<Vec<Vec<f64>>> {
    let x0 = vec![0.0; weights.n_neurons];
    run_sequence_from(weights, leak, &x0, inputs, counters, spike_threshold)
}

pub fn run_sequence_from(
    weights: &ReservoirWeights,
    leak: f64,
    x0: &[f64],
    inputs: &[Vec<f64>],
    counters: &mut ActivityCounters,
    spike_threshold: f64,
) -> Result<Vec<Vec<f64>>> {
    if inputs.is_empty() {
        return Err(EarlError::invalid("input sequence is empty"));
    }
    let n = weights.n_neurons;
    if x0.len() != n {
        return Err(EarlError::invalid(format!(
            "initial state has {} components, reservoir has {n}",
            x0.len()
        )));
    }
    let mut state = ReservoirState {
        x: x0.to_vec(),
        leak_rate: leak,
        t: 0,
    };
    let mut pre = vec![0.0; n];
    let mut out = Vec::with_capacity(inputs.len());
    let degree = weights.out_degree();
    for u in inputs {
        state.advance(weights, u, &mut pre)?;
        for (i, &x) in state.x.iter().enumerate() {
            if !x.is_finite() {
                return Err(EarlError::NumericFailure(format!(
                    "reservoir state became non-finite at step {}",
                    state.t
                )));
            }
            if x.abs() > spike_threshold {
                counters.spikes += 1;
                counters.synaptic_events += degree[i];
            }
        }
        counters.neuron_steps += n as u64;
        out.push(state.x.clone());
    }
    Ok(out)
}

/// Run many equal-length sequences from the zero state at once.
///
/// Produces exactly the trajectories and counters of calling
/// [`run_sequence`] on each sequence in turn, but streams the recurrent
/// matrix once per step instead of once per sequence per step.
pub fn run_batch(
    weights: &ReservoirWeights,
    leak: f64,
    sequences: &[Vec<Vec<f64>>],
    counters: &mut ActivityCounters,
    spike_threshold: f64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let b = sequences.len();
    if b == 0 {
        return Ok(Vec::new());
    }
    let steps = sequences[0].len();
    if steps == 0 || sequences.iter().any(|s| s.len() != steps) {
        return Err(EarlError::invalid("batched sequences must be non-empty and of equal length"));
    }
    let (n, d) = (weights.n_neurons, weights.n_inputs);
    if sequences.iter().flatten().any(|u| u.len() != d) {
        return Err(EarlError::invalid(format!("every input must have {d} components")));
    }
    let m = &weights.w_rec;
    let degree = weights.out_degree();
    // row-major n x b: neuron i of sequence j at i * b + j
    let mut x = vec![0.0; n * b];
    let mut pre = vec![0.0; n * b];
    let mut out: Vec<Vec<Vec<f64>>> = (0..b).map(|_| Vec::with_capacity(steps)).collect();
    for t in 0..steps {
        for i in 0..n {
            let acc = &mut pre[i * b..(i + 1) * b];
            acc.iter_mut().for_each(|a| *a = 0.0);
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                let v = m.vals[k];
                let src = &x[m.cols[k] * b..(m.cols[k] + 1) * b];
                for (a, s) in acc.iter_mut().zip(src) {
                    *a += v * s;
                }
            }
            let row = &weights.w_in[i * d..(i + 1) * d];
            for (j, a) in acc.iter_mut().enumerate() {
                *a += row.iter().zip(&sequences[j][t]).map(|(w, v)| w * v).sum::<f64>();
            }
        }
        for (i, (xs, ps)) in x.chunks_mut(b).zip(pre.chunks(b)).enumerate() {
            for (xv, p) in xs.iter_mut().zip(ps) {
                *xv = (1.0 - leak) * *xv + leak * p.tanh();
                if !xv.is_finite() {
                    return Err(EarlError::NumericFailure(format!(
                        "reservoir state became non-finite at step {}",
                        t + 1
                    )));
                }
                if xv.abs() > spike_threshold {
                    counters.spikes += 1;
                    counters.synaptic_events += degree[i];
                }
            }
        }
        counters.neuron_steps += (n * b) as u64;
        for (j, traj) in out.iter_mut().enumerate() {
            traj.push((0..n).map(|i| x[i * b + j]).collect());
        }
    }
    Ok(out)
}

/// Leaky integrate-and-fire parameters (ms, mV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    pub tau_m: f64,
    pub v_rest: f64,
    pub v_thresh: f64,
    pub v_reset: f64,
    pub dt: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        LifParams {
            tau_m: 20.0,
            v_rest: -65.0,
            v_thresh: -50.0,
            v_reset: -65.0,
            dt: 1.0,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_m > 0.0) || !(self.dt > 0.0) {
            return Err(EarlError::Config("tau_m and dt must be positive".into()));
        }
        if self.v_thresh <= self.v_reset {
            return Err(EarlError::Config("v_thresh must exceed v_reset".into()));
        }
        if self.dt >= 2.0 * self.tau_m {
            return Err(EarlError::Config(format!(
                "dt={} >= 2 tau_m={} makes Euler integration unstable",
                self.dt, self.tau_m
            )));
        }
        Ok(())
    }
}

/// One forward-Euler step of `tau_m dV/dt = -(V - V_rest) + I`. Neurons
/// reaching threshold spike and reset.
pub fn lif_step(v: &[f64], params: &LifParams, current: &[f64]) -> Result<(Vec<f64>, Vec<bool>)> {
    if v.len() != current.len() {
        return Err(EarlError::invalid(format!(
            "membrane has {} neurons but {} currents were given",
            v.len(),
            current.len()
        )));
    }
    params.validate()?;
    if params.dt >= params.tau_m {
        warn!("LIF step dt={} >= tau_m={} is poorly resolved", params.dt, params.tau_m);
    }
    Ok(lif_step_unchecked(v, params, current))
}

fn lif_step_unchecked(v: &[f64], p: &LifParams, current: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let k = p.dt / p.tau_m;
    let mut out = Vec::with_capacity(v.len());
    let mut spikes = Vec::with_capacity(v.len());
    for (&vi, &ii) in v.iter().zip(current) {
        let next = vi + k * (-(vi - p.v_rest) + ii);
        if next >= p.v_thresh {
            out.push(p.v_reset);
            spikes.push(true);
        } else {
            out.push(next);
            spikes.push(false);
        }
    }
    (out, spikes)
}

/// Turns continuous feature sequences into 0/1 spike trains, one LIF unit
/// per feature driven by `gain * u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifEncoder {
    pub params: LifParams,
    pub gain: f64,
}

impl Default for LifEncoder {
    fn default() -> Self {
        LifEncoder {
            params: LifParams::default(),
            gain: 20.0,
        }
    }
}

impl LifEncoder {
    pub fn encode(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.params.validate()?;
        let d = inputs.first().map_or(0, Vec::len);
        let mut v = vec![self.params.v_rest; d];
        let mut out = Vec::with_capacity(inputs.len());
        for u in inputs {
            if u.len() != d {
                return Err(EarlError::invalid("ragged input sequence"));
            }
            let current: Vec<f64> = u.iter().map(|x| self.gain * x).collect();
            let (next, spikes) = lif_step_unchecked(&v, &self.params, &current);
            v = next;
            out.push(spikes.iter().map(|&s| if s { 1.0 } else { 0.0 }).collect());
        }
        Ok(out)
    }
}
