//! Paired statistical comparisons: McNemar, bootstrap AUC differences,
//! and Benjamini–Hochberg step-up correction.

use super::metrics::roc_auc;
use crate::error::{Error, Result};
use crate::util::{chi2_sf_1df, quantile_linear, seeded_rng};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
    pub ci: Option<(f64, f64)>,
    pub adjusted_p: Option<f64>,
    /// Discordant counts (b, c) for McNemar.
    pub discordant: Option<(usize, usize)>,
    /// Point estimate of the compared quantity (ΔAUC for the bootstrap).
    pub point_estimate: Option<f64>,
    /// Resamples redrawn because they lost one class.
    pub redraws: Option<usize>,
    /// Set when b + c = 0 (no information).
    pub zero_discordance: bool,
}

/// McNemar test on paired predictions.
///
/// b counts rows where A is right and B wrong, c the reverse. Below 25
/// discordant pairs the exact two-sided binomial p is used; above, the
/// continuity-corrected chi-square (|b-c|-1)²/(b+c).
pub fn mcnemar(pred_a: &[usize], pred_b: &[usize], y_true: &[usize]) -> Result<StatTestResult> {
    if pred_a.len() != y_true.len() || pred_b.len() != y_true.len() {
        return Err(Error::Dimension { expected: y_true.len(), got: pred_a.len().min(pred_b.len()) });
    }
    let mut b = 0usize;
    let mut c = 0usize;
    for i in 0..y_true.len() {
        let a_ok = pred_a[i] == y_true[i];
        let b_ok = pred_b[i] == y_true[i];
        match (a_ok, b_ok) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    let n = b + c;
    if n == 0 {
        return Ok(StatTestResult {
            test: "mcnemar".into(),
            statistic: 0.0,
            p_value: 1.0,
            ci: None,
            adjusted_p: None,
            discordant: Some((b, c)),
            point_estimate: None,
            redraws: None,
            zero_discordance: true,
        });
    }
    let (statistic, p_value) = if n < 25 {
        // Exact binomial: p = min(1, 2·P(X <= min(b, c))), X ~ Bin(n, 1/2).
        let k = b.min(c);
        let mut term = 0.5f64.powi(n as i32); // C(n, 0)/2^n
        let mut tail = term;
        for i in 1..=k {
            term *= (n - i + 1) as f64 / i as f64;
            tail += term;
        }
        (k as f64, (2.0 * tail).min(1.0))
    } else {
        let stat = ((b as f64 - c as f64).abs() - 1.0).powi(2) / n as f64;
        (stat, chi2_sf_1df(stat))
    };
    Ok(StatTestResult {
        test: "mcnemar".into(),
        statistic,
        p_value,
        ci: None,
        adjusted_p: None,
        discordant: Some((b, c)),
        point_estimate: None,
        redraws: None,
        zero_discordance: false,
    })
}

/// Paired bootstrap over test indices for the AUC difference of two
/// score vectors on the same truth. Resamples that lose a class are
/// redrawn (counted). The 95% CI is the percentile interval; the
/// two-sided p is twice the smaller zero-crossing tail.
pub fn bootstrap_auc_diff(
    scores_a: &[f64],
    scores_b: &[f64],
    y_true: &[usize],
    n_boot: usize,
    seed: u64,
) -> Result<StatTestResult> {
    if n_boot < 100 {
        return Err(Error::Validation(format!("n_boot must be >= 100, got {n_boot}")));
    }
    if scores_a.len() != y_true.len() || scores_b.len() != y_true.len() {
        return Err(Error::Dimension { expected: y_true.len(), got: scores_a.len().min(scores_b.len()) });
    }
    let n = y_true.len();
    let point = roc_auc(y_true, scores_a)? - roc_auc(y_true, scores_b)?;

    let mut rng = seeded_rng(seed, 4242);
    let mut deltas = Vec::with_capacity(n_boot);
    let mut redraws = 0usize;
    while deltas.len() < n_boot {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let yt: Vec<usize> = idx.iter().map(|&i| y_true[i]).collect();
        let pos = yt.iter().filter(|&&v| v == 1).count();
        if pos == 0 || pos == yt.len() {
            redraws += 1;
            continue;
        }
        let sa: Vec<f64> = idx.iter().map(|&i| scores_a[i]).collect();
        let sb: Vec<f64> = idx.iter().map(|&i| scores_b[i]).collect();
        deltas.push(roc_auc(&yt, &sa)? - roc_auc(&yt, &sb)?);
    }
    deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = quantile_linear(&deltas, 0.025);
    let hi = quantile_linear(&deltas, 0.975);
    let frac_le = deltas.iter().filter(|&&d| d <= 0.0).count() as f64 / n_boot as f64;
    let frac_ge = deltas.iter().filter(|&&d| d >= 0.0).count() as f64 / n_boot as f64;
    let p = (2.0 * frac_le.min(frac_ge)).min(1.0);

    Ok(StatTestResult {
        test: "bootstrap_auc_diff".into(),
        statistic: point,
        p_value: p,
        ci: Some((lo, hi)),
        adjusted_p: None,
        discordant: None,
        point_estimate: Some(point),
        redraws: Some(redraws),
        zero_discordance: false,
    })
}

/// Benjamini–Hochberg step-up adjustment, returned in the input order.
pub fn benjamini_hochberg(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).unwrap());
    let mut adjusted = vec![0.0f64; m];
    let mut running_min = 1.0f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        let candidate = (m as f64 * p_values[i] / (rank + 1) as f64).min(1.0);
        running_min = running_min.min(candidate);
        adjusted[i] = running_min;
    }
    adjusted
}
