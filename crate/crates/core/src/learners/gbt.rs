//! Gradient-boosted trees with logistic loss: stage-wise regression trees
//! on the negative gradient, Newton leaf values, shrinkage, and row- and
//! column-subsampling.

use super::tree::{RegressionTree, TreeOptions};
use super::{binary_proba, check_binary_labels, FittedModel, Learner};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::util::seeded_rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub subsample: f64,
    pub colsample_bytree: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_estimators: 300,
            learning_rate: 0.1,
            max_depth: 5,
            subsample: 0.7,
            colsample_bytree: 0.7,
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

impl Learner for GbtParams {
    fn family(&self) -> &'static str {
        "gbt"
    }

    fn fit(&self, x: &Mat, y: &[usize], seed: u64) -> Result<Box<dyn FittedModel>> {
        check_binary_labels(y)?;
        if !(0.0 < self.learning_rate && self.learning_rate <= 1.0) {
            return Err(Error::Validation(format!(
                "learning_rate must lie in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 || self.n_estimators == 0 {
            return Err(Error::Validation("max_depth and n_estimators must be positive".into()));
        }
        if !(0.0 < self.subsample && self.subsample <= 1.0)
            || !(0.0 < self.colsample_bytree && self.colsample_bytree <= 1.0)
        {
            return Err(Error::Validation("subsample fractions must lie in (0, 1]".into()));
        }
        let n = x.n_rows();
        let d = x.n_cols();
        let pos = y.iter().filter(|&&v| v == 1).count();
        if pos == 0 || pos == n {
            return Err(Error::Data("boosting needs both classes in the target".into()));
        }

        let p0 = (pos as f64 / n as f64).clamp(1e-12, 1.0 - 1e-12);
        let f0 = (p0 / (1.0 - p0)).ln();
        let mut margins = vec![f0; n];
        let opts = TreeOptions {
            max_depth: Some(self.max_depth),
            min_samples_leaf: 1,
            min_samples_split: 2,
            max_features: None,
        };

        let n_rows_stage = ((self.subsample * n as f64).floor() as usize).max(1);
        let n_cols_stage = ((self.colsample_bytree * d as f64).floor() as usize).clamp(1, d);
        let mut trees = Vec::with_capacity(self.n_estimators);
        let mut loss_trace = Vec::with_capacity(self.n_estimators + 1);
        let log_loss = |margins: &[f64]| -> f64 {
            margins
                .iter()
                .zip(y)
                .map(|(&z, &t)| z.max(0.0) - z * t as f64 + (-z.abs()).exp().ln_1p())
                .sum::<f64>()
                / n as f64
        };
        loss_trace.push(log_loss(&margins));

        for stage in 0..self.n_estimators {
            let mut rng = seeded_rng(seed, 2000 + stage as u64);
            let rows: Vec<usize> = if n_rows_stage < n {
                let mut all: Vec<usize> = (0..n).collect();
                all.shuffle(&mut rng);
                let mut sub = all[..n_rows_stage].to_vec();
                sub.sort_unstable();
                sub
            } else {
                (0..n).collect()
            };
            let cols: Vec<usize> = if n_cols_stage < d {
                let mut all: Vec<usize> = (0..d).collect();
                all.shuffle(&mut rng);
                let mut sub = all[..n_cols_stage].to_vec();
                sub.sort_unstable();
                sub
            } else {
                (0..d).collect()
            };

            // Negative gradient of the log-loss and its hessian.
            let mut grad = vec![0.0f64; n];
            let mut hess = vec![0.0f64; n];
            for i in 0..n {
                let p = sigmoid(margins[i]);
                grad[i] = y[i] as f64 - p;
                hess[i] = (p * (1.0 - p)).max(1e-16);
            }

            let tree = RegressionTree::fit(x, &grad, &hess, &rows, &cols, &opts);
            for i in 0..n {
                margins[i] += self.learning_rate * tree.predict_one(x.row(i));
            }
            trees.push(tree);
            loss_trace.push(log_loss(&margins));
        }

        Ok(Box::new(GbtFitted {
            params: *self,
            base_margin: f0,
            trees,
            n_features: d,
            train_loss_trace: loss_trace,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtFitted {
    pub params: GbtParams,
    pub base_margin: f64,
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
    /// Training log-loss before boosting and after each stage.
    pub train_loss_trace: Vec<f64>,
}

impl GbtFitted {
    pub fn raw_margin(&self, row: &[f64]) -> f64 {
        self.base_margin
            + self.params.learning_rate
                * self.trees.iter().map(|t| t.predict_one(row)).sum::<f64>()
    }
}

impl FittedModel for GbtFitted {
    fn family(&self) -> &'static str {
        "gbt"
    }

    fn predict_proba(&self, x: &Mat) -> Result<Mat> {
        if x.n_cols() != self.n_features {
            return Err(Error::Dimension { expected: self.n_features, got: x.n_cols() });
        }
        Ok(binary_proba((0..x.n_rows()).map(|r| sigmoid(self.raw_margin(x.row(r)))).collect()))
    }

    fn parameters_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("gbt serializes")
    }
}
