//! Preprocessing + learner pipelines.
//!
//! Every model trains behind the same contract: optional z-score
//! standardization, optional PCA rotation/reduction (both fit on the
//! training rows only), then the family-specific learner.

use super::{
    FittedModel, GbtParams, KnnParams, Learner, LogRegParams, MlpParams, NbParams, SvmParams,
};
use crate::dsp::Scaler;
use crate::error::Result;
use crate::features::{pca_fit, pca_transform, PcaModel};
use crate::matrix::Mat;
use crate::neural::{train_cnn, CnnSpec, FittedCnn};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum LearnerSpec {
    Knn(KnnParams),
    Nb(NbParams),
    Svm(SvmParams),
    Rf(super::RfParams),
    Gbt(GbtParams),
    Mlp(MlpParams),
    Logreg(LogRegParams),
    Cnn(CnnSpec),
}

impl LearnerSpec {
    pub fn family(&self) -> &'static str {
        match self {
            LearnerSpec::Knn(_) => "knn",
            LearnerSpec::Nb(_) => "nb",
            LearnerSpec::Svm(_) => "svm",
            LearnerSpec::Rf(_) => "rf",
            LearnerSpec::Gbt(_) => "gbt",
            LearnerSpec::Mlp(_) => "mlp",
            LearnerSpec::Logreg(_) => "logreg",
            LearnerSpec::Cnn(_) => "cnn",
        }
    }

    pub fn to_learner(&self) -> Arc<dyn Learner> {
        match self.clone() {
            LearnerSpec::Knn(p) => Arc::new(p),
            LearnerSpec::Nb(p) => Arc::new(p),
            LearnerSpec::Svm(p) => Arc::new(p),
            LearnerSpec::Rf(p) => Arc::new(p),
            LearnerSpec::Gbt(p) => Arc::new(p),
            LearnerSpec::Mlp(p) => Arc::new(p),
            LearnerSpec::Logreg(p) => Arc::new(p),
            LearnerSpec::Cnn(spec) => Arc::new(CnnLearner(spec)),
        }
    }

    /// Static per-candidate inference-cost proxy used only to break exact
    /// accuracy ties in grid search; wall-clock would poison determinism.
    pub fn cost_proxy(&self) -> f64 {
        match self {
            LearnerSpec::Knn(p) => p.n_neighbors as f64,
            LearnerSpec::Nb(_) | LearnerSpec::Svm(_) | LearnerSpec::Logreg(_) => 0.0,
            LearnerSpec::Rf(p) => (p.n_estimators * p.max_depth.unwrap_or(30)) as f64,
            LearnerSpec::Gbt(p) => (p.n_estimators * p.max_depth) as f64,
            LearnerSpec::Mlp(p) => p.hidden_units as f64,
            LearnerSpec::Cnn(spec) => {
                spec.blocks.iter().map(|b| (b.filters * b.kernel_size) as f64).sum::<f64>()
                    + spec.dense_units as f64
            }
        }
    }

    pub fn hyperparams_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("learner spec serializes")
    }
}

/// Bridges the CNN trainer into the shared learner interface.
struct CnnLearner(CnnSpec);

impl Learner for CnnLearner {
    fn family(&self) -> &'static str {
        "cnn"
    }

    fn fit(&self, x: &Mat, y: &[usize], seed: u64) -> Result<Box<dyn FittedModel>> {
        Ok(Box::new(train_cnn(&self.0, x, y, seed)?))
    }
}

impl FittedModel for FittedCnn {
    fn family(&self) -> &'static str {
        "cnn"
    }

    fn predict_proba(&self, x: &Mat) -> Result<Mat> {
        Ok(super::binary_proba(FittedCnn::predict_proba(self, x)?))
    }

    fn parameters_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("cnn serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub standardize: bool,
    pub pca_components: Option<usize>,
    pub learner: LearnerSpec,
}

impl PipelineSpec {
    pub fn new(learner: LearnerSpec) -> Self {
        PipelineSpec { standardize: true, pca_components: None, learner }
    }

    pub fn with_pca(mut self, k: usize) -> Self {
        self.pca_components = Some(k);
        self
    }

    /// Fits preprocessing on the given rows only, then the learner.
    pub fn fit(&self, x: &Mat, y: &[usize], seed: u64) -> Result<FittedPipeline> {
        fit_preprocessed(
            self.standardize,
            self.pca_components,
            self.learner.to_learner().as_ref(),
            x,
            y,
            seed,
        )
    }
}

/// Fits the scaler/PCA stages on `x` only, then hands the transformed
/// rows to any learner (including externally supplied ones, which the
/// stacking tests use to inject instrumented bases).
pub fn fit_preprocessed(
    standardize: bool,
    pca_components: Option<usize>,
    learner: &dyn Learner,
    x: &Mat,
    y: &[usize],
    seed: u64,
) -> Result<FittedPipeline> {
    let scaler = if standardize { Some(Scaler::fit(x)?) } else { None };
    let xs = match &scaler {
        Some(s) => s.transform(x)?,
        None => x.clone(),
    };
    let pca = match pca_components {
        Some(k) => Some(pca_fit(&xs, k)?),
        None => None,
    };
    let xp = match &pca {
        Some(p) => pca_transform(p, &xs)?,
        None => xs,
    };
    let model = learner.fit(&xp, y, seed)?;
    Ok(FittedPipeline { scaler, pca, model, seed })
}

pub struct FittedPipeline {
    pub scaler: Option<Scaler>,
    pub pca: Option<PcaModel>,
    pub model: Box<dyn FittedModel>,
    pub seed: u64,
}

impl FittedPipeline {
    pub fn transform(&self, x: &Mat) -> Result<Mat> {
        let xs = match &self.scaler {
            Some(s) => s.transform(x)?,
            None => x.clone(),
        };
        Ok(match &self.pca {
            Some(p) => pca_transform(p, &xs)?,
            None => xs,
        })
    }

    pub fn predict_proba(&self, x: &Mat) -> Result<Mat> {
        self.model.predict_proba(&self.transform(x)?)
    }

    pub fn predict(&self, x: &Mat) -> Result<Vec<usize>> {
        Ok(super::predict_from_proba(&self.predict_proba(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::seeded_rng;
    use rand::Rng;

    fn blobs(n: usize, seed: u64) -> (Mat, Vec<usize>) {
        let mut rng = seeded_rng(seed, 0);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let cls = i % 2;
            let c = if cls == 1 { 2.0 } else { -2.0 };
            // Redundant correlated columns exercise the PCA stage.
            let a: f64 = c + rng.random_range(-1.0..1.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            rows.push(vec![a, b, a + b, a - b, 100.0 * a]);
            y.push(cls);
        }
        (Mat::from_rows(&rows), y)
    }

    #[test]
    fn standardize_pca_learner_chain_fits_and_predicts() {
        let (x, y) = blobs(60, 1);
        let spec = PipelineSpec::new(LearnerSpec::Logreg(LogRegParams::default())).with_pca(3);
        let fitted = spec.fit(&x, &y, 42).unwrap();
        assert!(fitted.scaler.is_some());
        assert_eq!(fitted.pca.as_ref().unwrap().n_components(), 3);
        let pred = fitted.predict(&x).unwrap();
        let acc = pred.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
        assert!(acc > 0.95, "accuracy {acc}");
    }

    #[test]
    fn every_family_produces_normalized_probabilities() {
        let (x, y) = blobs(48, 2);
        let specs = vec![
            LearnerSpec::Knn(KnnParams { n_neighbors: 3, ..KnnParams::default() }),
            LearnerSpec::Nb(NbParams::default()),
            LearnerSpec::Svm(SvmParams { c: 1.0, ..SvmParams::default() }),
            LearnerSpec::Rf(super::super::RfParams { n_estimators: 10, ..Default::default() }),
            LearnerSpec::Gbt(GbtParams { n_estimators: 10, ..Default::default() }),
            LearnerSpec::Mlp(MlpParams { hidden_units: 8, max_epochs: 20, ..Default::default() }),
            LearnerSpec::Logreg(LogRegParams::default()),
        ];
        for spec in specs {
            let pipeline = PipelineSpec::new(spec.clone()).with_pca(3);
            let fitted = pipeline.fit(&x, &y, 7).unwrap();
            let proba = fitted.predict_proba(&x).unwrap();
            for r in 0..proba.n_rows() {
                let s = proba.row(r).iter().sum::<f64>();
                assert!((s - 1.0).abs() < 1e-9, "{}: row sum {s}", spec.family());
                assert!(proba.row(r).iter().all(|&p| (0.0..=1.0).contains(&p)));
            }
        }
    }

    #[test]
    fn cnn_pipeline_trains_on_feature_vectors() {
        let (x, y) = blobs(80, 3);
        let mut cnn = CnnSpec::plain(1).unwrap();
        cnn.blocks[0].filters = 4;
        cnn.blocks[0].kernel_size = 3;
        cnn.dense_units = 8;
        cnn.epochs = 5;
        cnn.batch_size = 16;
        let spec = PipelineSpec::new(LearnerSpec::Cnn(cnn));
        let fitted = spec.fit(&x, &y, 11).unwrap();
        let proba = fitted.predict_proba(&x).unwrap();
        assert_eq!(proba.n_rows(), 80);
    }

    #[test]
    fn family_determinism_across_refits() {
        let (x, y) = blobs(40, 4);
        for spec in [
            LearnerSpec::Knn(KnnParams::default()),
            LearnerSpec::Nb(NbParams::default()),
            LearnerSpec::Svm(SvmParams { c: 1.0, ..SvmParams::default() }),
            LearnerSpec::Rf(super::super::RfParams { n_estimators: 8, ..Default::default() }),
            LearnerSpec::Gbt(GbtParams { n_estimators: 8, ..Default::default() }),
            LearnerSpec::Mlp(MlpParams { hidden_units: 4, max_epochs: 10, ..Default::default() }),
            LearnerSpec::Logreg(LogRegParams::default()),
        ] {
            let pipeline = PipelineSpec::new(spec.clone());
            let a = pipeline.fit(&x, &y, 31).unwrap();
            let b = pipeline.fit(&x, &y, 31).unwrap();
            assert_eq!(
                a.model.parameters_json(),
                b.model.parameters_json(),
                "{} refit differs",
                spec.family()
            );
            let qa = a.predict_proba(&x).unwrap();
            let qb = b.predict_proba(&x).unwrap();
            assert_eq!(qa, qb, "{} predictions differ", spec.family());
        }
    }
}
