//! Stacked generalization on out-of-fold base probabilities.
//!
//! Per fold, every base learner's full preprocessing pipeline and model
//! are fit on the other K-1 folds only, then predict the held-out fold;
//! the pooled OOF matrix trains an L2 logistic meta-learner. For
//! deployment the bases are refit on the complete training set.

use super::metrics::{confusion_and_rates, roc_auc};
use super::split::{grouped_stratified_kfold, stratified_kfold};
use crate::error::{Error, Result};
use crate::learners::{
    fit_preprocessed, logreg_fit_cv, FittedModel, FittedPipeline, Learner, LogRegParams,
};
use crate::matrix::Mat;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Meta-learner strength candidates searched by inner CV.
const META_STRENGTHS: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];

/// One base learner plus its preprocessing recipe.
#[derive(Clone)]
pub struct StackBase {
    pub name: String,
    pub standardize: bool,
    pub pca_components: Option<usize>,
    pub learner: Arc<dyn Learner>,
}

/// Out-of-fold probability matrix: N_train × (B · 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OofMatrix {
    pub rows: Mat,
    pub base_names: Vec<String>,
    pub fold_of: Vec<usize>,
    pub k: usize,
}

impl OofMatrix {
    /// Structural coverage check: every row was filled by exactly one
    /// held-out fold and all entries are probabilities.
    pub fn verify_coverage(&self) -> Result<()> {
        if self.fold_of.len() != self.rows.n_rows() {
            return Err(Error::Data("fold assignment length mismatch".into()));
        }
        if self.fold_of.iter().any(|&f| f >= self.k) {
            return Err(Error::Data("fold id out of range".into()));
        }
        if self.rows.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Data("OOF entries must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub struct StackedModel {
    pub bases: Vec<(StackBase, FittedPipeline)>,
    pub meta: Box<dyn FittedModel>,
    pub meta_params: LogRegParams,
    pub oof: OofMatrix,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineRule {
    MeanAverage,
    MajorityVote,
    Stacked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub rule: CombineRule,
    pub accuracy: f64,
    pub f1: f64,
    pub auc_roc: f64,
}

fn base_fit_seed(seed: u64, base: usize, fold: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((base as u64) << 20)
        .wrapping_add(fold as u64 + 1)
}

/// Trains the stack. When `groups` is given, folds are assigned at the
/// individual level so no animal leaks across a fold boundary.
pub fn stack_fit(
    bases: &[StackBase],
    x: &Mat,
    y: &[usize],
    groups: Option<&[String]>,
    k: usize,
    seed: u64,
) -> Result<StackedModel> {
    if bases.len() < 2 {
        return Err(Error::Validation(format!(
            "stacking needs at least 2 base learners, got {}",
            bases.len()
        )));
    }
    let n = x.n_rows();
    let fold_of = match groups {
        Some(g) => grouped_stratified_kfold(y, g, k, seed)?,
        None => stratified_kfold(y, k, seed)?,
    };

    let b = bases.len();
    let mut oof_rows = Mat::zeros(n, 2 * b);
    let mut filled = vec![false; n];
    for fold in 0..k {
        let train_idx: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
        let test_idx: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
        if train_idx.is_empty() || test_idx.is_empty() {
            return Err(Error::Data(format!("fold {fold} is degenerate")));
        }
        let x_tr = x.select_rows(&train_idx);
        let y_tr: Vec<usize> = train_idx.iter().map(|&i| y[i]).collect();
        let x_te = x.select_rows(&test_idx);
        for (bi, base) in bases.iter().enumerate() {
            let fitted = fit_preprocessed(
                base.standardize,
                base.pca_components,
                base.learner.as_ref(),
                &x_tr,
                &y_tr,
                base_fit_seed(seed, bi, fold),
            )
            .map_err(|e| {
                Error::Convergence(format!("base '{}' failed on fold {fold}: {e}", base.name))
            })?;
            let proba = fitted.predict_proba(&x_te)?;
            for (pos, &row) in test_idx.iter().enumerate() {
                oof_rows.set(row, 2 * bi, proba.get(pos, 0));
                oof_rows.set(row, 2 * bi + 1, proba.get(pos, 1));
            }
        }
        for &row in &test_idx {
            if filled[row] {
                return Err(Error::Data(format!("row {row} filled by two folds")));
            }
            filled[row] = true;
        }
    }
    if filled.iter().any(|&f| !f) {
        return Err(Error::Data("OOF coverage incomplete".into()));
    }
    let oof = OofMatrix {
        rows: oof_rows,
        base_names: bases.iter().map(|b| b.name.clone()).collect(),
        fold_of,
        k,
    };
    oof.verify_coverage()?;

    let meta_folds = k.clamp(2, 5);
    let (meta_params, meta) = logreg_fit_cv(&oof.rows, y, &META_STRENGTHS, meta_folds, seed)?;

    // Deployment bases: refit on the full training set.
    let mut refit = Vec::with_capacity(b);
    for (bi, base) in bases.iter().enumerate() {
        let fitted = fit_preprocessed(
            base.standardize,
            base.pca_components,
            base.learner.as_ref(),
            x,
            y,
            base_fit_seed(seed, bi, k),
        )
        .map_err(|e| Error::Convergence(format!("base '{}' failed on refit: {e}", base.name)))?;
        refit.push((base.clone(), fitted));
    }

    Ok(StackedModel { bases: refit, meta, meta_params, oof, seed })
}

impl StackedModel {
    /// B·2 base probabilities per row, the meta-learner's feature space.
    pub fn base_probabilities(&self, x: &Mat) -> Result<Mat> {
        let mut out = Mat::zeros(x.n_rows(), 2 * self.bases.len());
        for (bi, (_, pipeline)) in self.bases.iter().enumerate() {
            let proba = pipeline.predict_proba(x)?;
            for r in 0..x.n_rows() {
                out.set(r, 2 * bi, proba.get(r, 0));
                out.set(r, 2 * bi + 1, proba.get(r, 1));
            }
        }
        Ok(out)
    }

    pub fn predict_proba(&self, x: &Mat) -> Result<Mat> {
        self.meta.predict_proba(&self.base_probabilities(x)?)
    }

    pub fn predict(&self, x: &Mat) -> Result<Vec<usize>> {
        Ok(crate::learners::predict_from_proba(&self.predict_proba(x)?))
    }

    /// Unweighted mean of base positive probabilities.
    pub fn average_proba(&self, x: &Mat) -> Result<Vec<f64>> {
        let base = self.base_probabilities(x)?;
        let b = self.bases.len() as f64;
        Ok((0..x.n_rows())
            .map(|r| (0..self.bases.len()).map(|bi| base.get(r, 2 * bi + 1)).sum::<f64>() / b)
            .collect())
    }

    /// Majority vote over base argmax predictions; exact ties fall to
    /// class 0.
    pub fn majority_predict(&self, x: &Mat) -> Result<Vec<usize>> {
        let base = self.base_probabilities(x)?;
        let b = self.bases.len();
        Ok((0..x.n_rows())
            .map(|r| {
                let votes = (0..b).filter(|&bi| base.get(r, 2 * bi + 1) > base.get(r, 2 * bi)).count();
                usize::from(2 * votes > b)
            })
            .collect())
    }
}

/// Accuracy/F1/AUC of the three combination rules on a common test set.
pub fn stack_ablation(model: &StackedModel, x: &Mat, y: &[usize]) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::with_capacity(3);

    let avg = model.average_proba(x)?;
    let avg_pred: Vec<usize> = avg.iter().map(|&p| usize::from(p > 0.5)).collect();
    let r = confusion_and_rates(y, &avg_pred)?;
    rows.push(AblationRow {
        rule: CombineRule::MeanAverage,
        accuracy: r.accuracy,
        f1: r.f1,
        auc_roc: roc_auc(y, &avg)?,
    });

    let maj_pred = model.majority_predict(x)?;
    let r = confusion_and_rates(y, &maj_pred)?;
    let maj_scores: Vec<f64> = maj_pred.iter().map(|&v| v as f64).collect();
    rows.push(AblationRow {
        rule: CombineRule::MajorityVote,
        accuracy: r.accuracy,
        f1: r.f1,
        auc_roc: roc_auc(y, &maj_scores)?,
    });

    let proba = model.predict_proba(x)?;
    let scores: Vec<f64> = (0..x.n_rows()).map(|r| proba.get(r, 1)).collect();
    let pred: Vec<usize> = scores.iter().map(|&p| usize::from(p > 0.5)).collect();
    let r = confusion_and_rates(y, &pred)?;
    rows.push(AblationRow {
        rule: CombineRule::Stacked,
        accuracy: r.accuracy,
        f1: r.f1,
        auc_roc: roc_auc(y, &scores)?,
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LogRegParams;
    use crate::util::seeded_rng;
    use rand::Rng;
    use std::sync::Mutex;

    /// Logistic learner restricted to one input column; two of these make
    /// the complementary-information scenario.
    struct ColumnLearner {
        column: usize,
    }

    struct ColumnFitted {
        column: usize,
        inner: Box<dyn FittedModel>,
    }

    impl Learner for ColumnLearner {
        fn family(&self) -> &'static str {
            "column-logreg"
        }
        fn fit(&self, x: &Mat, y: &[usize], seed: u64) -> Result<Box<dyn FittedModel>> {
            let sub = x.select_cols(&[self.column]);
            let inner = LogRegParams { l2_strength: 1e-3 }.fit(&sub, y, seed)?;
            Ok(Box::new(ColumnFitted { column: self.column, inner }))
        }
    }

    impl FittedModel for ColumnFitted {
        fn family(&self) -> &'static str {
            "column-logreg"
        }
        fn predict_proba(&self, x: &Mat) -> Result<Mat> {
            self.inner.predict_proba(&x.select_cols(&[self.column]))
        }
        fn parameters_json(&self) -> serde_json::Value {
            self.inner.parameters_json()
        }
    }

    /// Two complementary weak learners: feature 0 is informative on the
    /// first half of the sample space, feature 1 on the second; each
    /// base sees only its own column.
    fn complementary_dataset(n: usize, seed: u64) -> (Mat, Vec<usize>) {
        let mut rng = seeded_rng(seed, 0);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = usize::from(rng.random_range(0.0..1.0) < 0.5);
            let signal = if label == 1 { 2.0 } else { -2.0 };
            let noise: f64 = rng.random_range(-0.4..0.4);
            if i % 2 == 0 {
                rows.push(vec![signal + noise, rng.random_range(-2.4..2.4)]);
            } else {
                rows.push(vec![rng.random_range(-2.4..2.4), signal + noise]);
            }
            y.push(label);
        }
        (Mat::from_rows(&rows), y)
    }

    fn column_bases() -> Vec<StackBase> {
        vec![
            StackBase {
                name: "col0".into(),
                standardize: false,
                pca_components: None,
                learner: Arc::new(ColumnLearner { column: 0 }),
            },
            StackBase {
                name: "col1".into(),
                standardize: false,
                pca_components: None,
                learner: Arc::new(ColumnLearner { column: 1 }),
            },
        ]
    }

    #[test]
    fn stack_beats_both_complementary_bases() {
        let (x_tr, y_tr) = complementary_dataset(240, 1);
        let (x_te, y_te) = complementary_dataset(240, 2);
        let model = stack_fit(&column_bases(), &x_tr, &y_tr, None, 5, 7).unwrap();

        let mut base_accs = Vec::new();
        for (_, pipeline) in &model.bases {
            let pred = pipeline.predict(&x_te).unwrap();
            let acc = pred.iter().zip(&y_te).filter(|(a, b)| a == b).count() as f64
                / y_te.len() as f64;
            base_accs.push(acc);
        }
        let stacked_pred = model.predict(&x_te).unwrap();
        let stacked_acc = stacked_pred.iter().zip(&y_te).filter(|(a, b)| a == b).count() as f64
            / y_te.len() as f64;
        let best_base = base_accs.iter().cloned().fold(0.0, f64::max);
        assert!(
            stacked_acc >= best_base,
            "stacked {stacked_acc} < best base {best_base} ({base_accs:?})"
        );
        // Each half-informative base should sit well below the stack.
        assert!(best_base < 0.95, "bases unexpectedly strong: {base_accs:?}");
        assert!(stacked_acc > 0.9, "stacked accuracy {stacked_acc}");

        let ablation = stack_ablation(&model, &x_te, &y_te).unwrap();
        let acc_of = |rule: CombineRule| {
            ablation.iter().find(|r| r.rule == rule).unwrap().accuracy
        };
        assert!(acc_of(CombineRule::Stacked) >= acc_of(CombineRule::MeanAverage) - 1e-9);
        assert_eq!(ablation.len(), 3);
    }

    #[test]
    fn oof_matrix_covers_every_row_exactly_once() {
        let (x, y) = complementary_dataset(100, 3);
        let model = stack_fit(&column_bases(), &x, &y, None, 4, 11).unwrap();
        model.oof.verify_coverage().unwrap();
        assert_eq!(model.oof.rows.n_rows(), 100);
        assert_eq!(model.oof.rows.n_cols(), 4);
        let mut per_fold = [0usize; 4];
        for &f in &model.oof.fold_of {
            per_fold[f] += 1;
        }
        assert!(per_fold.iter().all(|&c| c > 0));
    }

    #[test]
    fn single_base_is_rejected() {
        let (x, y) = complementary_dataset(40, 4);
        let bases = vec![column_bases().remove(0)];
        assert!(stack_fit(&bases, &x, &y, None, 3, 1).is_err());
    }

    /// Records a fingerprint of the training rows each fit call saw; the
    /// leak witness zeroes a held-out fold and asserts the fold's fit
    /// inputs did not change.
    struct SpyLearner {
        log: Arc<Mutex<Vec<(usize, f64)>>>, // (n_rows, row checksum)
    }

    impl Learner for SpyLearner {
        fn family(&self) -> &'static str {
            "spy"
        }
        fn fit(&self, x: &Mat, y: &[usize], seed: u64) -> Result<Box<dyn FittedModel>> {
            let checksum: f64 = x.data().iter().enumerate().map(|(i, v)| v * (i % 97) as f64).sum();
            self.log.lock().unwrap().push((x.n_rows(), checksum));
            LogRegParams { l2_strength: 1.0 }.fit(x, y, seed)
        }
    }

    #[test]
    fn zeroing_a_held_out_fold_does_not_change_that_folds_fit() {
        let (x, y) = complementary_dataset(80, 5);
        let k = 4;
        let seed = 13;

        let run = |x: &Mat| -> Vec<(usize, f64)> {
            let log = Arc::new(Mutex::new(Vec::new()));
            let bases = vec![
                StackBase {
                    name: "spy".into(),
                    standardize: false,
                    pca_components: None,
                    learner: Arc::new(SpyLearner { log: Arc::clone(&log) }),
                },
                column_bases().remove(0),
            ];
            stack_fit(&bases, x, &y, None, k, seed).unwrap();
            let out = log.lock().unwrap().clone();
            out
        };

        // Fold assignment depends only on (y, k, seed), so it is shared.
        let fold_of = stratified_kfold(&y, k, seed).unwrap();
        let target_fold = 2usize;
        let mut x_zeroed = x.clone();
        for r in 0..x.n_rows() {
            if fold_of[r] == target_fold {
                for c in 0..x.n_cols() {
                    x_zeroed.set(r, c, 0.0);
                }
            }
        }

        let base_log = run(&x);
        let zeroed_log = run(&x_zeroed);
        // Spy fit #target_fold trained without the zeroed rows, so its
        // training fingerprint is identical in both runs.
        assert_eq!(base_log[target_fold], zeroed_log[target_fold]);
        // Sanity: other folds DID see the zeroed rows and must differ.
        assert_ne!(base_log[(target_fold + 1) % k], zeroed_log[(target_fold + 1) % k]);
    }

    #[test]
    fn grouped_folds_respect_individuals() {
        let (x, y) = complementary_dataset(96, 6);
        let groups: Vec<String> = y
            .iter()
            .enumerate()
            .map(|(i, &cls)| format!("ind-{cls}-{}", i % 6))
            .collect();
        let model = stack_fit(&column_bases(), &x, &y, Some(&groups), 3, 21).unwrap();
        for (g, f) in groups.iter().zip(&model.oof.fold_of) {
            let first = groups.iter().position(|gg| gg == g).unwrap();
            assert_eq!(model.oof.fold_of[first], *f, "group {g} split across folds");
        }
    }
}
