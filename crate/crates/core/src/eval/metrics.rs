//! Discrimination metrics. Class 1 is the positive class by convention;
//! task labels are binarized upstream against the configured positive
//! class. All rates are percentages.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatesResult {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
    /// Set when a 0/0 rate was forced to 0.
    pub degenerate: bool,
}

/// One line of the per-model report tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub model: String,
    pub mfcc: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc_roc: f64,
    pub it_ms: f64,
    pub confusion: Option<Confusion>,
}

pub fn confusion_and_rates(y_true: &[usize], y_pred: &[usize]) -> Result<RatesResult> {
    if y_true.is_empty() {
        return Err(Error::Data("cannot score an empty prediction set".into()));
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension { expected: y_true.len(), got: y_pred.len() });
    }
    let mut c = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (1, 0) => c.fn_ += 1,
            _ => return Err(Error::Validation("labels must be binary".into())),
        }
    }
    let n = c.total() as f64;
    let mut degenerate = false;
    let mut ratio = |num: usize, den: usize| -> f64 {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = (c.tp + c.tn) as f64 / n;
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        degenerate = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(RatesResult {
        accuracy: accuracy * 100.0,
        precision: precision * 100.0,
        recall: recall * 100.0,
        f1: f1 * 100.0,
        confusion: c,
        degenerate,
    })
}

/// AUC-ROC as a percentage, Mann–Whitney formulation with average-rank
/// tie handling (each tied pair counts one half).
pub fn roc_auc(y_true: &[usize], scores: &[f64]) -> Result<f64> {
    if y_true.len() != scores.len() {
        return Err(Error::Dimension { expected: y_true.len(), got: scores.len() });
    }
    let n_pos = y_true.iter().filter(|&&v| v == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data("AUC needs both classes in the truth vector".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Average ranks across runs of equal scores (1-based).
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if y_true[idx] == 1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64) * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_score_100() {
        let y = vec![1, 0, 1, 0];
        let r = confusion_and_rates(&y, &y).unwrap();
        assert_eq!(r.accuracy, 100.0);
        assert_eq!(r.precision, 100.0);
        assert_eq!(r.recall, 100.0);
        assert_eq!(r.f1, 100.0);
        assert_eq!(r.confusion.fp + r.confusion.fn_, 0);
        assert!(!r.degenerate);
    }

    #[test]
    fn hand_computed_mixed_case() {
        // truth {1,1,0,0}, pred {1,0,0,0}: precision 100, recall 50,
        // F1 66.67, accuracy 75.
        let r = confusion_and_rates(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap();
        assert_eq!(r.accuracy, 75.0);
        assert_eq!(r.precision, 100.0);
        assert_eq!(r.recall, 50.0);
        assert!((r.f1 - 200.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn all_negative_predictor_is_flagged_degenerate() {
        let r = confusion_and_rates(&[1, 0, 1, 0], &[0, 0, 0, 0]).unwrap();
        assert_eq!(r.accuracy, 50.0);
        assert_eq!(r.precision, 0.0);
        assert_eq!(r.recall, 0.0);
        assert!(r.degenerate);
    }

    #[test]
    fn f1_is_consistent_with_precision_and_recall() {
        let r = confusion_and_rates(&[1, 1, 1, 0, 0, 1, 0], &[1, 0, 1, 1, 0, 1, 0]).unwrap();
        let f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
        assert!((f1 - r.f1).abs() < 1e-9);
        let acc = 100.0 * (r.confusion.tp + r.confusion.tn) as f64 / r.confusion.total() as f64;
        assert_eq!(acc, r.accuracy);
    }

    #[test]
    fn auc_boundary_conventions() {
        // Perfect separation.
        assert_eq!(roc_auc(&[0, 0, 1, 1], &[0.1, 0.2, 0.8, 0.9]).unwrap(), 100.0);
        // All scores equal: maximal ties give 50%.
        assert_eq!(roc_auc(&[0, 1, 0, 1], &[0.5, 0.5, 0.5, 0.5]).unwrap(), 50.0);
        // Single-class truth is rejected.
        assert!(roc_auc(&[1, 1], &[0.1, 0.9]).is_err());
    }

    /// O(n²) pair-counting oracle (ties count one half).
    pub(crate) fn auc_pair_oracle(y: &[usize], s: &[f64]) -> f64 {
        let mut wins = 0.0f64;
        let mut pairs = 0.0f64;
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] == 1 && y[j] == 0 {
                    pairs += 1.0;
                    if s[i] > s[j] {
                        wins += 1.0;
                    } else if s[i] == s[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs * 100.0
    }

    #[test]
    fn auc_matches_pair_counting_oracle_with_heavy_ties() {
        use crate::util::seeded_rng;
        use rand::Rng;
        for case in 0..40 {
            let mut rng = seeded_rng(77, case);
            let n = rng.random_range(5..40);
            let y: Vec<usize> = (0..n).map(|i| usize::from(i % 2 == 0)).collect();
            // Quantized scores force ties.
            let s: Vec<f64> =
                (0..n).map(|_| (rng.random_range(0..7) as f64) / 7.0).collect();
            let got = roc_auc(&y, &s).unwrap();
            let want = auc_pair_oracle(&y, &s);
            assert!((got - want).abs() < 1e-12, "case {case}: {got} vs {want}");
        }
    }
}
