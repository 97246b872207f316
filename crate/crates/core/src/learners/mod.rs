//! From-scratch classifiers: KNN, Gaussian NB, SVM (SMO), random forest,
//! gradient-boosted trees, MLP, and the logistic-regression meta-learner,
//! plus grid search and the preprocessing pipeline that wraps them.

mod envelope;
mod forest;
mod gbt;
mod grid;
mod knn;
mod logreg;
mod mlp;
mod naive_bayes;
mod pipeline;
mod svm;
mod tree;

pub use envelope::{
    decode_numeric_arrays, encode_numeric_arrays, fitted_from_envelope, ModelEnvelope,
    NumericEncoding, PreprocessingIds,
};
pub use forest::{RfFitted, RfParams};
pub use gbt::{GbtFitted, GbtParams};
pub use grid::{grid_search, GridCell, GridSearchResult};
pub use knn::{KnnFitted, KnnParams, KnnWeight};
pub use logreg::{logreg_fit_cv, logreg_objective_and_gradient, LogRegFitted, LogRegParams};
pub use mlp::{mlp_loss_and_grad, Activation, MlpFitted, MlpParams};
pub use naive_bayes::{NbFitted, NbParams};
pub use pipeline::{fit_preprocessed, FittedPipeline, LearnerSpec, PipelineSpec};
pub use svm::{kkt_max_violation, smo_fit_raw, GammaParam, SvmFitted, SvmParams};
pub use tree::{gini_gain, ClassificationTree, Node, RegressionTree, TreeOptions};

use crate::error::Result;
use crate::matrix::Mat;

/// A configured-but-unfitted classifier.
pub trait Learner: Send + Sync {
    fn family(&self) -> &'static str;
    fn fit(&self, x: &Mat, y: &[usize], seed: u64) -> Result<Box<dyn FittedModel>>;
}

/// An immutable fitted classifier.
pub trait FittedModel: Send + Sync {
    fn family(&self) -> &'static str;
    /// N×2 class probabilities; every row sums to 1.
    fn predict_proba(&self, x: &Mat) -> Result<Mat>;
    /// Family-specific fitted parameters for the model envelope.
    fn parameters_json(&self) -> serde_json::Value;
}

/// Hard predictions from probabilities: class 1 iff P(1) > P(0); exact
/// ties resolve to the lower label index.
pub fn predict_from_proba(proba: &Mat) -> Vec<usize> {
    (0..proba.n_rows()).map(|r| usize::from(proba.get(r, 1) > proba.get(r, 0))).collect()
}

/// Packs per-row positive-class probabilities into the N×2 layout.
pub(crate) fn binary_proba(p1: Vec<f64>) -> Mat {
    let mut out = Mat::zeros(p1.len(), 2);
    for (r, p) in p1.into_iter().enumerate() {
        let p = p.clamp(0.0, 1.0);
        out.set(r, 0, 1.0 - p);
        out.set(r, 1, p);
    }
    out
}

pub(crate) fn check_binary_labels(y: &[usize]) -> Result<()> {
    if y.iter().any(|&v| v > 1) {
        return Err(crate::error::Error::Validation(
            "labels must be binary (0/1); multiclass targets are unsupported".into(),
        ));
    }
    Ok(())
}
