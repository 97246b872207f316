//! Random forest: bootstrapped Gini trees with √d feature subsampling.

use super::tree::{ClassificationTree, TreeOptions};
use super::{binary_proba, check_binary_labels, FittedModel, Learner};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::util::seeded_rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for RfParams {
    fn default() -> Self {
        RfParams { n_estimators: 200, max_depth: None, min_samples_leaf: 1, min_samples_split: 2 }
    }
}

impl Learner for RfParams {
    fn family(&self) -> &'static str {
        "rf"
    }

    fn fit(&self, x: &Mat, y: &[usize], seed: u64) -> Result<Box<dyn FittedModel>> {
        check_binary_labels(y)?;
        if self.n_estimators == 0 {
            return Err(Error::Validation("forest needs at least one tree".into()));
        }
        if x.n_rows() == 0 {
            return Err(Error::Data("empty training set".into()));
        }
        let n = x.n_rows();
        let d = x.n_cols();
        let opts = TreeOptions {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            min_samples_split: self.min_samples_split,
            max_features: Some(((d as f64).sqrt().floor() as usize).max(1)),
        };

        // One RNG stream per tree keeps the forest identical across any
        // thread count.
        let trees: Vec<ClassificationTree> = (0..self.n_estimators)
            .into_par_iter()
            .map(|t| {
                let mut rng = seeded_rng(seed, 1000 + t as u64);
                let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                ClassificationTree::fit(x, y, &bootstrap, &opts, &mut rng)
            })
            .collect();

        Ok(Box::new(RfFitted { params: *self, trees, n_features: d }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfFitted {
    pub params: RfParams,
    pub trees: Vec<ClassificationTree>,
    pub n_features: usize,
}

impl FittedModel for RfFitted {
    fn family(&self) -> &'static str {
        "rf"
    }

    fn predict_proba(&self, x: &Mat) -> Result<Mat> {
        if x.n_cols() != self.n_features {
            return Err(Error::Dimension { expected: self.n_features, got: x.n_cols() });
        }
        let p1 = (0..x.n_rows())
            .map(|r| {
                let row = x.row(r);
                self.trees.iter().map(|t| t.predict_one(row)).sum::<f64>() / self.trees.len() as f64
            })
            .collect();
        Ok(binary_proba(p1))
    }

    fn parameters_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("rf serializes")
    }
}
