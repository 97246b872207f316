//! Reliability diagnostics: equal-width probability bins and the Brier
//! score.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_predicted: Option<f64>,
    pub empirical_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
    pub brier: f64,
}

/// Bins positive-class probabilities into `n_bins` equal-width intervals
/// (last bin closed above) and reports the Brier score.
pub fn calibration_report(
    probabilities: &[f64],
    y_true: &[usize],
    n_bins: usize,
) -> Result<CalibrationReport> {
    if n_bins < 2 {
        return Err(Error::Validation(format!("n_bins must be >= 2, got {n_bins}")));
    }
    if probabilities.len() != y_true.len() {
        return Err(Error::Dimension { expected: y_true.len(), got: probabilities.len() });
    }
    if probabilities.is_empty() {
        return Err(Error::Data("empty calibration input".into()));
    }
    if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Validation("probabilities must lie in [0, 1]".into()));
    }

    let mut sums = vec![(0usize, 0.0f64, 0usize); n_bins]; // (count, Σp, Σy)
    for (&p, &y) in probabilities.iter().zip(y_true) {
        let mut b = (p * n_bins as f64).floor() as usize;
        if b == n_bins {
            b -= 1; // p == 1.0 joins the top bin
        }
        sums[b].0 += 1;
        sums[b].1 += p;
        sums[b].2 += y;
    }
    let bins = sums
        .into_iter()
        .enumerate()
        .map(|(i, (count, sum_p, sum_y))| CalibrationBin {
            lo: i as f64 / n_bins as f64,
            hi: (i + 1) as f64 / n_bins as f64,
            count,
            mean_predicted: (count > 0).then(|| sum_p / count as f64),
            empirical_rate: (count > 0).then(|| sum_y as f64 / count as f64),
        })
        .collect();

    let brier = probabilities
        .iter()
        .zip(y_true)
        .map(|(&p, &y)| (p - y as f64) * (p - y as f64))
        .sum::<f64>()
        / probabilities.len() as f64;
    Ok(CalibrationReport { bins, brier })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_probabilities_have_zero_brier() {
        let r = calibration_report(&[1.0, 0.0, 1.0, 0.0], &[1, 0, 1, 0], 10).unwrap();
        assert_eq!(r.brier, 0.0);
    }

    #[test]
    fn constant_half_on_balanced_data_scores_quarter() {
        let r = calibration_report(&[0.5; 10], &[1, 0, 1, 0, 1, 0, 1, 0, 1, 0], 10).unwrap();
        assert_eq!(r.brier, 0.25);
        // Only the 0.5 bin is occupied.
        let occupied: Vec<usize> =
            r.bins.iter().enumerate().filter(|(_, b)| b.count > 0).map(|(i, _)| i).collect();
        assert_eq!(occupied, vec![5]);
        assert_eq!(r.bins[5].empirical_rate, Some(0.5));
    }

    #[test]
    fn empty_bins_report_count_zero_without_rates() {
        let r = calibration_report(&[0.05, 0.95], &[0, 1], 10).unwrap();
        assert_eq!(r.bins[3].count, 0);
        assert_eq!(r.bins[3].mean_predicted, None);
        assert_eq!(r.bins[3].empirical_rate, None);
    }

    #[test]
    fn random_case_matches_direct_formula() {
        use crate::util::seeded_rng;
        use rand::Rng;
        let mut rng = seeded_rng(23, 0);
        let p: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..=1.0)).collect();
        let y: Vec<usize> = (0..100).map(|_| usize::from(rng.random_range(0.0..1.0) < 0.5)).collect();
        let r = calibration_report(&p, &y, 10).unwrap();
        let direct: f64 =
            p.iter().zip(&y).map(|(&pp, &yy)| (pp - yy as f64).powi(2)).sum::<f64>() / 100.0;
        assert!((r.brier - direct).abs() < 1e-12);
        let total: usize = r.bins.iter().map(|b| b.count).sum();
        assert_eq!(total, 100);
    }
}
