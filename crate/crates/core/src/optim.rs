//! AdamW with decoupled weight decay over flat parameter vectors.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamW {
    pub config: AdamWConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamW {
    pub fn new(config: AdamWConfig, n_params: usize) -> Self {
        AdamW {
            config,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.t
    }

    /// One update: `p <- p (1 - lr wd)`, then the bias-corrected adaptive
    /// moment step `p <- p - lr m_hat / (sqrt(v_hat) + eps)`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        let c = self.config;
        self.t += 1;
        let bc1 = 1.0 - c.beta1.powi(self.t);
        let bc2 = 1.0 - c.beta2.powi(self.t);
        let decay = 1.0 - c.learning_rate * c.weight_decay;
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = c.beta1 * self.m[i] + (1.0 - c.beta1) * g;
            self.v[i] = c.beta2 * self.v[i] + (1.0 - c.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] *= decay;
            params[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_sign_scaled() {
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        let mut opt = AdamW::new(cfg, 2);
        let mut p = vec![1.0, -2.0];
        opt.step(&mut p, &[0.5, -3.0]);
        // m_hat = g, v_hat = g^2
        let want0 = 1.0 - 1e-3 * 0.5 / (0.5 + 1e-8);
        let want1 = -2.0 + 1e-3 * 3.0 / (3.0 + 1e-8);
        assert!((p[0] - want0).abs() < 1e-15);
        assert!((p[1] - want1).abs() < 1e-15);
    }

    #[test]
    fn decay_is_decoupled() {
        let cfg = AdamWConfig {
            learning_rate: 0.1,
            weight_decay: 0.5,
            ..Default::default()
        };
        let mut opt = AdamW::new(cfg, 1);
        let mut p = vec![2.0];
        opt.step(&mut p, &[0.0]);
        assert!((p[0] - 2.0 * 0.95).abs() < 1e-15);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let cfg = AdamWConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        let mut opt = AdamW::new(cfg, 3);
        let mut p = vec![0.3, -1.7, 4.0];
        let before = p.clone();
        for _ in 0..10 {
            opt.step(&mut p, &[1.0, -2.0, 0.5]);
        }
        assert_eq!(p, before);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut opt = AdamW::new(
            AdamWConfig {
                learning_rate: 0.05,
                weight_decay: 0.0,
                ..Default::default()
            },
            2,
        );
        let mut p = vec![3.0, -4.0];
        for _ in 0..2000 {
            let g = vec![2.0 * (p[0] - 1.0), 2.0 * (p[1] + 0.5)];
            opt.step(&mut p, &g);
        }
        assert!((p[0] - 1.0).abs() < 1e-3 && (p[1] + 0.5).abs() < 1e-3);
    }
}
