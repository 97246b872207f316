//! Single-hidden-layer perceptron: sigmoid output, cross-entropy loss
//! with L2 weight penalty, Adam with constant learning rate, early
//! stopping on a 10% validation split.

use super::{binary_proba, check_binary_labels, FittedModel, Learner};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::neural::{Adam, Optimizer};
use crate::util::seeded_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpParams {
    pub hidden_units: usize,
    pub activation: Activation,
    /// L2 penalty on weights (not biases).
    pub alpha: f64,
    /// Constant learning rate for Adam.
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_units: 128,
            activation: Activation::Tanh,
            alpha: 1e-3,
            learning_rate: 1e-3,
            batch_size: 200,
            max_epochs: 200,
            patience: 5,
            val_fraction: 0.1,
        }
    }
}

/// Flat layout: W1 (h×d) | b1 (h) | W2 (h) | b2.
fn n_params(d: usize, h: usize) -> usize {
    h * d + h + h + 1
}

fn activate(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => z.max(0.0),
        Activation::Tanh => z.tanh(),
    }
}

fn activate_grad(a: Activation, z: f64) -> f64 {
    match a {
        Activation::Relu => {
            if z > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Tanh => {
            let t = z.tanh();
            1.0 - t * t
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Cross-entropy + (α/2N)·‖W‖² over a batch, with full gradients; pure in
/// (params, batch) so finite differences can audit it.
pub fn mlp_loss_and_grad(
    params: &[f64],
    d: usize,
    h: usize,
    activation: Activation,
    alpha: f64,
    xs: &[&[f64]],
    ys: &[f64],
) -> (f64, Vec<f64>) {
    let b = xs.len();
    assert!(b > 0);
    let (w1, rest) = params.split_at(h * d);
    let (b1, rest) = rest.split_at(h);
    let (w2, b2) = rest.split_at(h);
    let b2 = b2[0];

    let mut grad = vec![0.0f64; params.len()];
    let scale = 1.0 / b as f64;
    let mut loss = 0.0f64;
    let mut z1 = vec![0.0f64; h];
    let mut a1 = vec![0.0f64; h];
    for (x, &y) in xs.iter().zip(ys) {
        for u in 0..h {
            let row = &w1[u * d..(u + 1) * d];
            z1[u] = b1[u] + row.iter().zip(*x).map(|(a, b)| a * b).sum::<f64>();
            a1[u] = activate(activation, z1[u]);
        }
        let z2 = b2 + w2.iter().zip(&a1).map(|(a, b)| a * b).sum::<f64>();
        loss += scale * (z2.max(0.0) - z2 * y + (-z2.abs()).exp().ln_1p());

        let dz2 = scale * (sigmoid(z2) - y);
        grad[h * d + h + h] += dz2; // b2
        for u in 0..h {
            grad[h * d + h + u] += dz2 * a1[u]; // W2
            let dz1 = dz2 * w2[u] * activate_grad(activation, z1[u]);
            if dz1 == 0.0 {
                continue;
            }
            grad[h * d + u] += dz1; // b1
            let g_row = &mut grad[u * d..(u + 1) * d];
            for (gw, &xv) in g_row.iter_mut().zip(*x) {
                *gw += dz1 * xv;
            }
        }
    }

    // L2 on weights only.
    let reg_scale = alpha * scale;
    let mut reg = 0.0f64;
    for (i, &w) in w1.iter().enumerate() {
        reg += w * w;
        grad[i] += reg_scale * w;
    }
    for (u, &w) in w2.iter().enumerate() {
        reg += w * w;
        grad[h * d + h + u] += reg_scale * w;
    }
    loss += 0.5 * reg_scale * reg;
    (loss, grad)
}

impl Learner for MlpParams {
    fn family(&self) -> &'static str {
        "mlp"
    }

    fn fit(&self, x: &Mat, y: &[usize], seed: u64) -> Result<Box<dyn FittedModel>> {
        check_binary_labels(y)?;
        if self.hidden_units == 0 {
            return Err(Error::Validation("hidden_units must be >= 1".into()));
        }
        let d = x.n_cols();
        let h = self.hidden_units;
        let n = x.n_rows();
        if n < 2 {
            return Err(Error::Data("MLP needs at least 2 training rows".into()));
        }

        // Glorot-uniform init, biases zero.
        let mut weights = vec![0.0f64; n_params(d, h)];
        {
            let mut rng = seeded_rng(seed, 0);
            let limit = (6.0 / (d + h) as f64).sqrt();
            for w in &mut weights[..h * d] {
                *w = rng.random_range(-limit..limit);
            }
            let limit = (6.0 / (h + 1) as f64).sqrt();
            for w in &mut weights[h * d + h..h * d + h + h] {
                *w = rng.random_range(-limit..limit);
            }
        }

        // Stratified validation split for early stopping.
        let mut train_idx = Vec::new();
        let mut val_idx = Vec::new();
        {
            let mut rng = seeded_rng(seed, 1);
            for class in [0usize, 1] {
                let mut idx: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
                idx.shuffle(&mut rng);
                let n_val = ((idx.len() as f64 * self.val_fraction).round() as usize)
                    .min(idx.len().saturating_sub(1));
                let split = idx.len() - n_val;
                train_idx.extend_from_slice(&idx[..split]);
                val_idx.extend_from_slice(&idx[split..]);
            }
            train_idx.sort_unstable();
            val_idx.sort_unstable();
        }
        let use_early_stop = !val_idx.is_empty();

        let batch = self.batch_size.clamp(1, train_idx.len());
        let mut adam = Adam::new(self.learning_rate, weights.len());
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut strikes = 0usize;
        let mut shuffle_rng = seeded_rng(seed, 2);
        let mut order = train_idx.clone();

        let val_loss = |weights: &[f64]| -> f64 {
            let xs: Vec<&[f64]> = val_idx.iter().map(|&i| x.row(i)).collect();
            let ys: Vec<f64> = val_idx.iter().map(|&i| y[i] as f64).collect();
            // Penalty-free validation objective.
            mlp_loss_and_grad(weights, d, h, self.activation, 0.0, &xs, &ys).0
        };

        for _epoch in 0..self.max_epochs {
            order.shuffle(&mut shuffle_rng);
            for chunk in order.chunks(batch) {
                let xs: Vec<&[f64]> = chunk.iter().map(|&i| x.row(i)).collect();
                let ys: Vec<f64> = chunk.iter().map(|&i| y[i] as f64).collect();
                let (loss, grad) =
                    mlp_loss_and_grad(&weights, d, h, self.activation, self.alpha, &xs, &ys);
                if !loss.is_finite() {
                    return Err(Error::Convergence("non-finite MLP training loss".into()));
                }
                adam.step(&mut weights, &grad);
            }
            if use_early_stop {
                let vl = val_loss(&weights);
                let improved = best.as_ref().is_none_or(|(b, _)| vl < *b);
                if improved {
                    best = Some((vl, weights.clone()));
                    strikes = 0;
                } else {
                    strikes += 1;
                    if strikes > self.patience {
                        break;
                    }
                }
            }
        }
        if let Some((_, w)) = best {
            weights = w;
        }

        Ok(Box::new(MlpFitted { params: self.clone(), n_features: d, weights }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpFitted {
    pub params: MlpParams,
    pub n_features: usize,
    pub weights: Vec<f64>,
}

impl MlpFitted {
    fn forward(&self, x: &[f64]) -> f64 {
        let d = self.n_features;
        let h = self.params.hidden_units;
        let (w1, rest) = self.weights.split_at(h * d);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(h);
        let mut z2 = b2[0];
        for u in 0..h {
            let row = &w1[u * d..(u + 1) * d];
            let z1 = b1[u] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            z2 += w2[u] * activate(self.params.activation, z1);
        }
        sigmoid(z2)
    }
}

impl FittedModel for MlpFitted {
    fn family(&self) -> &'static str {
        "mlp"
    }

    fn predict_proba(&self, x: &Mat) -> Result<Mat> {
        if x.n_cols() != self.n_features {
            return Err(Error::Dimension { expected: self.n_features, got: x.n_cols() });
        }
        Ok(binary_proba((0..x.n_rows()).map(|r| self.forward(x.row(r))).collect()))
    }

    fn parameters_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("mlp serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::predict_from_proba;

    #[test]
    fn zero_weight_network_on_balanced_batch_gives_ln2_loss() {
        let d = 4;
        let h = 3;
        let params = vec![0.0; n_params(d, h)];
        let x1 = vec![0.3, -0.7, 0.2, 0.9];
        let x2 = vec![-0.1, 0.4, -0.5, 0.6];
        let (loss, _) = mlp_loss_and_grad(
            &params,
            d,
            h,
            Activation::Tanh,
            0.5,
            &[&x1, &x2],
            &[1.0, 0.0],
        );
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-9, "loss {loss}");
    }

    #[test]
    fn gradients_match_central_finite_differences() {
        use crate::util::seeded_rng;
        let d = 5;
        let h = 4;
        for activation in [Activation::Tanh, Activation::Relu] {
            let mut rng = seeded_rng(31, 0);
            let mut params: Vec<f64> =
                (0..n_params(d, h)).map(|_| rng.random_range(-0.7..0.7)).collect();
            let xs_own: Vec<Vec<f64>> = (0..5)
                .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let xs: Vec<&[f64]> = xs_own.iter().map(|v| v.as_slice()).collect();
            let ys = vec![1.0, 0.0, 1.0, 1.0, 0.0];
            let alpha = 0.01;
            let (_, grad) = mlp_loss_and_grad(&params, d, h, activation, alpha, &xs, &ys);
            let hstep = 1e-5;
            for i in 0..params.len() {
                let orig = params[i];
                params[i] = orig + hstep;
                let (lp, _) = mlp_loss_and_grad(&params, d, h, activation, alpha, &xs, &ys);
                params[i] = orig - hstep;
                let (lm, _) = mlp_loss_and_grad(&params, d, h, activation, alpha, &xs, &ys);
                params[i] = orig;
                let fd = (lp - lm) / (2.0 * hstep);
                let denom = fd.abs().max(grad[i].abs()).max(1e-8);
                assert!(
                    (fd - grad[i]).abs() / denom < 1e-5,
                    "{activation:?} param {i}: analytic {} vs fd {fd}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn learns_xor_like_interaction() {
        use crate::util::seeded_rng;
        let mut rng = seeded_rng(17, 0);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..240 {
            let a: f64 = rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            rows.push(vec![a, b]);
            y.push(usize::from(a * b > 0.0));
        }
        let x = Mat::from_rows(&rows);
        let params = MlpParams {
            hidden_units: 16,
            activation: Activation::Tanh,
            alpha: 1e-5,
            learning_rate: 3e-3,
            batch_size: 32,
            max_epochs: 400,
            val_fraction: 0.0, // slow-start problem; no early stopping
            ..MlpParams::default()
        };
        let m = params.fit(&x, &y, 5).unwrap();
        let pred = predict_from_proba(&m.predict_proba(&x).unwrap());
        let acc = pred.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
        assert!(acc > 0.9, "training accuracy {acc}");
    }

    #[test]
    fn fixed_seed_reproduces_weights() {
        let x = Mat::from_rows(&[
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.2, 0.8],
            vec![0.9, 0.1],
            vec![0.1, 0.7],
            vec![0.8, 0.3],
        ]);
        let y = vec![0, 1, 0, 1, 0, 1];
        let params = MlpParams { hidden_units: 6, max_epochs: 30, ..MlpParams::default() };
        let a = params.fit(&x, &y, 3).unwrap().parameters_json();
        let b = params.fit(&x, &y, 3).unwrap().parameters_json();
        assert_eq!(a, b);
    }
}
