//! Sobol low-discrepancy sequence and the initial space-filling design.

use log::warn;
use rand::Rng;

use crate::error::{EarlError, Result};
use crate::model::{Configuration, SearchSpace};
use crate::seed::rng_from;

const BITS: usize = 32;

/// Joe–Kuo (new-joe-kuo-6.21201) primitive polynomials and initial direction
/// numbers for dimensions 2..=8: `(degree s, coefficient a, m_1..m_s)`.
const JOE_KUO: [(u32, u32, &[u32]); 7] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

pub const MAX_DIMENSION: usize = JOE_KUO.len() + 1;

fn direction_numbers(dim: usize) -> Vec<[u32; BITS]> {
    let mut out = Vec::with_capacity(dim);
    let mut first = [0u32; BITS];
    for (k, v) in first.iter_mut().enumerate() {
        *v = 1u32 << (BITS - 1 - k);
    }
    out.push(first);
    for &(s, a, m) in JOE_KUO.iter().take(dim.saturating_sub(1)) {
        let s = s as usize;
        let mut v = [0u32; BITS];
        for k in 0..s.min(BITS) {
            v[k] = m[k] << (BITS - 1 - k);
        }
        for k in s..BITS {
            let mut x = v[k - s] ^ (v[k - s] >> s);
            for i in 1..s {
                if (a >> (s - 1 - i)) & 1 == 1 {
                    x ^= v[k - i];
                }
            }
            v[k] = x;
        }
        out.push(v);
    }
    out
}

fn laine_karras(mut x: u32, seed: u32) -> u32 {
    x = x.wrapping_add(seed);
    x ^= x.wrapping_mul(0x6c50_b47c);
    x ^= x.wrapping_mul(0xb82f_1e52);
    x ^= x.wrapping_mul(0xc7af_e638);
    x ^= x.wrapping_mul(0x8d22_f6e6);
    x
}

/// Hash-based nested uniform (Owen) scramble of a 32-bit coordinate.
fn owen_scramble(x: u32, seed: u32) -> u32 {
    laine_karras(x.reverse_bits(), seed).reverse_bits()
}

/// Stateful generator emitting Sobol points in Gray-code order, starting at
/// index 1 (the all-zero point is never emitted).
#[derive(Debug, Clone)]
pub struct SobolStream {
    dimension: usize,
    next_index: u64,
    state: Vec<u32>,
    directions: Vec<[u32; BITS]>,
    scramble: Option<Vec<u32>>,
}

impl SobolStream {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension > MAX_DIMENSION {
            return Err(EarlError::Config(format!(
                "Sobol dimension must be in 1..={MAX_DIMENSION}, got {dimension}"
            )));
        }
        Ok(SobolStream {
            dimension,
            next_index: 1,
            state: vec![0; dimension],
            directions: direction_numbers(dimension),
            scramble: None,
        })
    }

    /// Owen-scrambled stream; each dimension gets its own scramble seed.
    pub fn scrambled(dimension: usize, seed: u64) -> Result<Self> {
        let mut s = Self::new(dimension)?;
        let mut rng = rng_from(seed);
        s.scramble = Some((0..dimension).map(|_| rng.random::<u32>()).collect());
        Ok(s)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let c = (self.next_index - 1).trailing_ones() as usize;
        assert!(c < BITS, "Sobol stream exhausted");
        for (x, dir) in self.state.iter_mut().zip(&self.directions) {
            *x ^= dir[c];
        }
        self.next_index += 1;
        let scale = 1.0 / (1u64 << BITS) as f64;
        match &self.scramble {
            None => self.state.iter().map(|&x| x as f64 * scale).collect(),
            // Half-cell offset keeps scrambled coordinates off the boundary.
            Some(seeds) => self
                .state
                .iter()
                .zip(seeds)
                .map(|(&x, &s)| (owen_scramble(x, s) as f64 + 0.5) * scale)
                .collect(),
        }
    }
}

impl Iterator for SobolStream {
    type Item = Vec<f64>;
    fn next(&mut self) -> Option<Vec<f64>> {
        if self.next_index >= 1u64 << BITS {
            return None;
        }
        Some(self.next_point())
    }
}

pub fn scale_to_space(point: &[f64; 4], space: &SearchSpace) -> Configuration {
    space.scale(point)
}

#[derive(Debug, Clone, Copy)]
pub struct DesignOptions {
    pub scramble: bool,
    pub max_points: usize,
    pub jitter_retries: usize,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            scramble: false,
            max_points: 1 << 16,
            jitter_retries: 8,
        }
    }
}

/// The first `n_init` configurations of the (by default unscrambled) Sobol
/// design. The seed only matters when scrambling is enabled.
pub fn generate_initial_design(
    space: &SearchSpace,
    n_init: usize,
    seed: u64,
) -> Result<Vec<Configuration>> {
    generate_initial_design_with(space, n_init, seed, DesignOptions::default())
}

pub fn generate_initial_design_with(
    space: &SearchSpace,
    n_init: usize,
    seed: u64,
    opts: DesignOptions,
) -> Result<Vec<Configuration>> {
    if n_init == 0 {
        return Err(EarlError::Config("initial design needs at least one point".into()));
    }
    if n_init > opts.max_points {
        return Err(EarlError::Config(format!(
            "initial design of {n_init} points exceeds the maximum of {}",
            opts.max_points
        )));
    }
    let mut stream = if opts.scramble {
        SobolStream::scrambled(SearchSpace::DIM, seed)?
    } else {
        SobolStream::new(SearchSpace::DIM)?
    };
    let mut out: Vec<Configuration> = Vec::with_capacity(n_init);
    for _ in 0..n_init {
        let p = stream.next_point();
        let mut c = space.scale(&[p[0], p[1], p[2], p[3]]);
        if out.contains(&c) {
            c = jitter_size(c, space, &out, opts.jitter_retries);
        }
        out.push(c);
    }
    Ok(out)
}

/// Nudge the integer dimension by +1, -1, +2, -2, ... until the
/// configuration is unique among `taken`.
fn jitter_size(
    c: Configuration,
    space: &SearchSpace,
    taken: &[Configuration],
    retries: usize,
) -> Configuration {
    let (lo, hi) = (space.size_range.lo as i64, space.size_range.hi as i64);
    for attempt in 0..retries {
        let step = (attempt / 2 + 1) as i64;
        let offset = if attempt % 2 == 0 { step } else { -step };
        let size = (c.reservoir_size as i64 + offset).clamp(lo, hi) as usize;
        let cand = Configuration {
            reservoir_size: size,
            ..c
        };
        if !taken.contains(&cand) {
            return cand;
        }
    }
    warn!("initial design keeps duplicate configuration {c}");
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_prefix() {
        let mut s = SobolStream::new(1).unwrap();
        let got: Vec<f64> = (0..8).map(|_| s.next_point()[0]).collect();
        assert_eq!(got, vec![0.5, 0.75, 0.25, 0.375, 0.875, 0.625, 0.125, 0.1875]);
    }

    // First points (after the origin) of the unscrambled 8-D Joe–Kuo
    // sequence, as produced by scipy.stats.qmc.Sobol(d=8, scramble=False).
    #[test]
    fn eight_dimensional_reference() {
        let expected: [[f64; 8]; 4] = [
            [0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
            [0.75, 0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75],
            [0.25, 0.75, 0.75, 0.75, 0.25, 0.25, 0.75, 0.25],
            [0.375, 0.375, 0.625, 0.875, 0.375, 0.125, 0.375, 0.875],
        ];
        let mut s = SobolStream::new(8).unwrap();
        for row in expected {
            assert_eq!(s.next_point(), row.to_vec());
        }
    }

    #[test]
    fn eight_dimensional_deep_points() {
        let mut s = SobolStream::new(8).unwrap();
        let pts: Vec<Vec<f64>> = (0..1024).map(|_| s.next_point()).collect();
        // scipy index i corresponds to our draw i - 1
        assert_eq!(
            pts[99],
            vec![0.4140625, 0.2578125, 0.7734375, 0.7265625, 0.8828125, 0.7421875, 0.0234375, 0.4765625]
        );
        assert_eq!(
            pts[999],
            vec![
                0.2197265625, 0.0966796875, 0.5185546875, 0.6767578125, 0.2802734375, 0.9072265625,
                0.0458984375, 0.8994140625
            ]
        );
        assert_eq!(
            pts[1023],
            vec![
                0.00146484375, 0.37646484375, 0.44775390625, 0.48681640625, 0.55712890625,
                0.84423828125, 0.24169921875, 0.58740234375
            ]
        );
    }

    #[test]
    fn dimension_capacity() {
        assert!(SobolStream::new(0).is_err());
        assert!(SobolStream::new(9).is_err());
        assert!(SobolStream::new(8).is_ok());
    }

    #[test]
    fn points_strictly_inside() {
        for mut s in [SobolStream::new(4).unwrap(), SobolStream::scrambled(4, 7).unwrap()] {
            for _ in 0..4096 {
                assert!(s.next_point().iter().all(|&v| v > 0.0 && v < 1.0));
            }
        }
    }

    #[test]
    fn half_interval_balance() {
        for mut s in [SobolStream::new(2).unwrap(), SobolStream::scrambled(2, 11).unwrap()] {
            let pts: Vec<Vec<f64>> = (0..256).map(|_| s.next_point()).collect();
            for d in 0..2 {
                let low = pts.iter().filter(|p| p[d] < 0.5).count();
                assert_eq!(low, 128);
            }
        }
    }

    #[test]
    fn scrambled_is_deterministic() {
        let a: Vec<_> = SobolStream::scrambled(4, 99).unwrap().take(32).collect();
        let b: Vec<_> = SobolStream::scrambled(4, 99).unwrap().take(32).collect();
        let c: Vec<_> = SobolStream::scrambled(4, 100).unwrap().take(32).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn design_sizes_and_bounds() {
        let space = SearchSpace::default();
        let d = generate_initial_design(&space, 20, 42).unwrap();
        assert_eq!(d.len(), 20);
        assert!(d.iter().all(|c| space.contains(c)));
        let one = generate_initial_design(&space, 1, 42).unwrap();
        assert_eq!(one[0], space.scale(&[0.5; 4]));
        assert!(generate_initial_design(&space, 0, 42).is_err());
        assert!(generate_initial_design(&space, (1 << 16) + 1, 42).is_err());
        // unscrambled output ignores the seed
        assert_eq!(d, generate_initial_design(&space, 20, 7).unwrap());
    }

    #[test]
    fn design_is_distinct() {
        let space = SearchSpace::default();
        let d = generate_initial_design(&space, 256, 42).unwrap();
        for i in 0..d.len() {
            for j in 0..i {
                assert_ne!(d[i], d[j]);
            }
        }
    }

    #[test]
    fn jitter_resolves_collisions() {
        let space = SearchSpace::default();
        let c = space.scale(&[0.5; 4]);
        let taken = vec![c, Configuration { reservoir_size: 551, ..c }];
        let j = jitter_size(c, &space, &taken, 8);
        assert_eq!(j.reservoir_size, 549);
    }
}
