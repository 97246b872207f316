//! First-order optimizers over flat parameter vectors.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Rmsprop,
}

pub trait Optimizer {
    fn step(&mut self, params: &mut [f64], grads: &[f64]);
}

/// Adam with bias correction (β₁ = 0.9, β₂ = 0.999, ε = 1e-8 by default).
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }
}

impl Optimizer for Adam {
    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), grads.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// RMSprop (ρ = 0.9, ε = 1e-8).
#[derive(Debug, Clone)]
pub struct Rmsprop {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    v: Vec<f64>,
}

impl Rmsprop {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Rmsprop { lr, rho: 0.9, eps: 1e-8, v: vec![0.0; n_params] }
    }
}

impl Optimizer for Rmsprop {
    fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), grads.len());
        for i in 0..params.len() {
            let g = grads[i];
            self.v[i] = self.rho * self.v[i] + (1.0 - self.rho) * g * g;
            params[i] -= self.lr * g / (self.v[i].sqrt() + self.eps);
        }
    }
}

pub fn make_optimizer(kind: OptimizerKind, lr: f64, n_params: usize) -> Box<dyn Optimizer> {
    match kind {
        OptimizerKind::Adam => Box::new(Adam::new(lr, n_params)),
        OptimizerKind::Rmsprop => Box::new(Rmsprop::new(lr, n_params)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_hand_arithmetic() {
        // With m, v zero-initialized, the bias-corrected first step is
        //   m̂ = g, v̂ = g², so Δθ = -lr · g / (|g| + ε).
        let g = 0.37f64;
        let lr = 1e-3;
        let mut adam = Adam::new(lr, 1);
        let mut p = vec![1.0];
        adam.step(&mut p, &[g]);
        let want = 1.0 - lr * g / (g.abs() + 1e-8);
        assert!((p[0] - want).abs() < 1e-15, "{} vs {want}", p[0]);

        // Negative gradients move the parameter up by the same magnitude.
        let mut adam2 = Adam::new(lr, 1);
        let mut p2 = vec![1.0];
        adam2.step(&mut p2, &[-g]);
        assert!((p2[0] - (2.0 - want)).abs() < 1e-12);
    }

    #[test]
    fn adam_second_step_matches_recurrence() {
        let (g1, g2) = (0.5f64, -0.25f64);
        let lr = 1e-2;
        let mut adam = Adam::new(lr, 1);
        let mut p = vec![0.0];
        adam.step(&mut p, &[g1]);
        adam.step(&mut p, &[g2]);

        // Replay the published update rule by hand.
        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let mut m = 0.0;
        let mut v = 0.0;
        let mut theta = 0.0;
        for (t, g) in [(1, g1), (2, g2)] {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1_pow(b1, t));
            let vh = v / (1.0 - b1_pow(b2, t));
            theta -= lr * mh / (vh.sqrt() + eps);
        }
        assert!((p[0] - theta).abs() < 1e-15);

        fn b1_pow(b: f64, t: i32) -> f64 {
            b.powi(t)
        }
    }

    #[test]
    fn zero_lr_leaves_parameters_unchanged() {
        let mut adam = Adam::new(0.0, 3);
        let mut rms = Rmsprop::new(0.0, 3);
        let mut p = vec![1.0, -2.0, 3.0];
        for _ in 0..25 {
            adam.step(&mut p, &[0.3, -0.7, 0.9]);
            rms.step(&mut p, &[0.3, -0.7, 0.9]);
        }
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn rmsprop_first_step_hand_arithmetic() {
        let g = 2.0f64;
        let lr = 1e-3;
        let mut r = Rmsprop::new(lr, 1);
        let mut p = vec![0.0];
        r.step(&mut p, &[g]);
        let v = 0.1 * g * g;
        let want = -lr * g / (v.sqrt() + 1e-8);
        assert!((p[0] - want).abs() < 1e-15);
    }
}
