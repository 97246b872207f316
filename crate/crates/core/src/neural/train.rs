//! Mini-batch training with early stopping on a held-out slice.

use super::network::CnnNetwork;
use super::optim::make_optimizer;
use super::CnnSpec;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::util::seeded_rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCnn {
    pub network: CnnNetwork,
    pub history: Vec<EpochStats>,
    pub seed: u64,
}

impl FittedCnn {
    pub fn predict_proba(&self, x: &Mat) -> Result<Vec<f64>> {
        (0..x.n_rows()).map(|r| self.network.forward(x.row(r))).collect()
    }
}

/// Trains a network on rows of `x` (shape N × input_len) against binary
/// labels. Mini-batches are shuffled per epoch from the seed; a
/// stratified 10% validation split drives early stopping (patience per
/// spec), restoring the best-epoch weights.
pub fn train_cnn(spec: &CnnSpec, x: &Mat, y: &[usize], seed: u64) -> Result<FittedCnn> {
    if x.n_rows() != y.len() {
        return Err(Error::Dimension { expected: x.n_rows(), got: y.len() });
    }
    if x.n_rows() < spec.batch_size {
        return Err(Error::Data(format!(
            "need at least batch_size = {} samples, got {}",
            spec.batch_size,
            x.n_rows()
        )));
    }
    let mut net = CnnNetwork::new(spec.clone(), x.n_cols())?;
    net.init_glorot(&mut seeded_rng(seed, 0));

    // Stratified validation split: the tail share of each class after a
    // seeded shuffle.
    let mut val_idx: Vec<usize> = Vec::new();
    let mut train_idx: Vec<usize> = Vec::new();
    {
        let mut rng = seeded_rng(seed, 1);
        for class in [0usize, 1] {
            let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
            idx.shuffle(&mut rng);
            let n_val = (idx.len() as f64 * spec.early_stopping.val_fraction).round() as usize;
            let n_val = n_val.min(idx.len().saturating_sub(1));
            let split = idx.len() - n_val;
            train_idx.extend_from_slice(&idx[..split]);
            val_idx.extend_from_slice(&idx[split..]);
        }
        train_idx.sort_unstable();
        val_idx.sort_unstable();
    }
    let use_early_stop = !val_idx.is_empty() && spec.early_stopping.val_fraction > 0.0;

    let mut optimizer = make_optimizer(spec.optimizer, spec.learning_rate, net.layout.n_params);
    let mut history = Vec::with_capacity(spec.epochs);
    let mut best_params: Option<(f64, Vec<f64>)> = None;
    let mut strikes = 0usize;

    let eval_loss = |net: &CnnNetwork, idx: &[usize]| -> Result<f64> {
        let xs: Vec<&[f64]> = idx.iter().map(|&i| x.row(i)).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| y[i] as f64).collect();
        Ok(net.loss_and_grad(&xs, &ys)?.0)
    };

    let mut order = train_idx.clone();
    let mut shuffle_rng = seeded_rng(seed, 2);
    for epoch in 0..spec.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(spec.batch_size) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| x.row(i)).collect();
            let ys: Vec<f64> = chunk.iter().map(|&i| y[i] as f64).collect();
            let (loss, grad) = net.loss_and_grad(&xs, &ys)?;
            if !loss.is_finite() {
                return Err(Error::Convergence(format!("non-finite loss at epoch {epoch}")));
            }
            optimizer.step(&mut net.params, &grad);
            epoch_loss += loss;
            batches += 1;
        }
        let train_loss = epoch_loss / batches.max(1) as f64;

        let val_loss = if use_early_stop { Some(eval_loss(&net, &val_idx)?) } else { None };
        history.push(EpochStats { epoch, train_loss, val_loss });

        if let Some(vl) = val_loss {
            let improved = best_params.as_ref().is_none_or(|(best, _)| vl < *best);
            if improved {
                best_params = Some((vl, net.params.clone()));
                strikes = 0;
            } else {
                strikes += 1;
                if strikes > spec.early_stopping.patience {
                    break;
                }
            }
        }
    }
    if let Some((_, params)) = best_params {
        net.params = params;
    }
    Ok(FittedCnn { network: net, history, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{CnnSpec, DilationSchedule};
    use crate::util::seeded_rng;
    use rand::Rng;

    /// Separable toy vectors: class 1 ramps upward, class 0 downward.
    fn toy_data(n_per_class: usize, d: usize, seed: u64) -> (Mat, Vec<usize>) {
        let mut rng = seeded_rng(seed, 9);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..2 * n_per_class {
            let class = i % 2;
            let slope = if class == 1 { 1.0 } else { -1.0 };
            rows.push(
                (0..d)
                    .map(|j| slope * (j as f64 / d as f64 - 0.5) + rng.random_range(-0.15..0.15))
                    .collect::<Vec<f64>>(),
            );
            y.push(class);
        }
        (Mat::from_rows(&rows), y)
    }

    #[test]
    fn learns_separable_vectors_within_budget() {
        let (x, y) = toy_data(40, 30, 3);
        let mut spec = CnnSpec::plain(1).unwrap();
        spec.blocks[0].filters = 8;
        spec.dense_units = 16;
        let fitted = train_cnn(&spec, &x, &y, 7).unwrap();
        let proba = fitted.predict_proba(&x).unwrap();
        let acc = proba
            .iter()
            .zip(&y)
            .filter(|(p, &t)| usize::from(**p >= 0.5) == t)
            .count() as f64
            / y.len() as f64;
        assert!(acc >= 0.95, "training accuracy {acc}");
        assert!(!fitted.history.is_empty());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (x, y) = toy_data(20, 24, 4);
        let mut spec = CnnSpec::dilated(2, DilationSchedule::Exponential).unwrap();
        spec.blocks[0].filters = 4;
        spec.blocks[1].filters = 4;
        spec.dense_units = 8;
        spec.epochs = 3;
        let a = train_cnn(&spec, &x, &y, 11).unwrap();
        let b = train_cnn(&spec, &x, &y, 11).unwrap();
        assert_eq!(a.network.params, b.network.params);
        assert_eq!(a.history, b.history);
        let c = train_cnn(&spec, &x, &y, 12).unwrap();
        assert_ne!(a.network.params, c.network.params);
    }

    #[test]
    fn full_batch_small_lr_loss_is_nonincreasing() {
        let (x, y) = toy_data(8, 16, 5);
        let mut spec = CnnSpec::plain(1).unwrap();
        spec.blocks[0].filters = 3;
        spec.dense_units = 4;
        spec.batch_size = 16; // full batch
        spec.epochs = 20;
        spec.learning_rate = 1e-4;
        spec.early_stopping.val_fraction = 0.0; // no early stop
        let fitted = train_cnn(&spec, &x, &y, 13).unwrap();
        let losses: Vec<f64> = fitted.history.iter().map(|h| h.train_loss).collect();
        for w in losses.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let (x, y) = toy_data(4, 16, 6);
        let spec = CnnSpec::plain(1).unwrap(); // batch 32 > 8 rows
        assert!(train_cnn(&spec, &x, &y, 1).is_err());
    }
}
