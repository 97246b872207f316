//! Gaussian naive Bayes with a relative variance floor.

use super::{binary_proba, check_binary_labels, FittedModel, Learner};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NbParams {
    /// Variance floor as a fraction of the largest per-feature variance.
    pub var_smoothing: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams { var_smoothing: 1e-9 }
    }
}

impl Learner for NbParams {
    fn family(&self) -> &'static str {
        "nb"
    }

    fn fit(&self, x: &Mat, y: &[usize], _seed: u64) -> Result<Box<dyn FittedModel>> {
        check_binary_labels(y)?;
        if x.n_rows() != y.len() {
            return Err(Error::Dimension { expected: x.n_rows(), got: y.len() });
        }
        let d = x.n_cols();
        let n = x.n_rows();

        // Global per-feature variance sets the smoothing scale.
        let global_mean = x.column_means();
        let mut global_var = vec![0.0f64; d];
        for row in x.rows_iter() {
            for (c, (&v, &m)) in row.iter().zip(&global_mean).enumerate() {
                global_var[c] += (v - m) * (v - m);
            }
        }
        let max_var = global_var.iter().map(|v| v / n as f64).fold(0.0f64, f64::max);
        let eps = self.var_smoothing * max_var.max(1e-300);

        let mut class_mean = [vec![0.0f64; d], vec![0.0f64; d]];
        let mut class_var = [vec![0.0f64; d], vec![0.0f64; d]];
        let mut counts = [0usize; 2];
        for (row, &cls) in x.rows_iter().zip(y) {
            counts[cls] += 1;
            for (c, &v) in row.iter().enumerate() {
                class_mean[cls][c] += v;
            }
        }
        for cls in 0..2 {
            if counts[cls] < 2 {
                return Err(Error::Data(format!(
                    "class {cls} has {} training rows; Gaussian fit needs at least 2",
                    counts[cls]
                )));
            }
            for m in class_mean[cls].iter_mut() {
                *m /= counts[cls] as f64;
            }
        }
        for (row, &cls) in x.rows_iter().zip(y) {
            for (c, &v) in row.iter().enumerate() {
                let dlt = v - class_mean[cls][c];
                class_var[cls][c] += dlt * dlt;
            }
        }
        for cls in 0..2 {
            for v in class_var[cls].iter_mut() {
                *v = *v / counts[cls] as f64 + eps;
            }
        }

        Ok(Box::new(NbFitted {
            params: *self,
            log_prior: [
                (counts[0] as f64 / n as f64).ln(),
                (counts[1] as f64 / n as f64).ln(),
            ],
            mean: class_mean,
            var: class_var,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbFitted {
    pub params: NbParams,
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

impl NbFitted {
    fn log_likelihood(&self, cls: usize, row: &[f64]) -> f64 {
        let mut ll = self.log_prior[cls];
        for (c, &v) in row.iter().enumerate() {
            let var = self.var[cls][c];
            let d = v - self.mean[cls][c];
            ll += -0.5 * (2.0 * std::f64::consts::PI * var).ln() - d * d / (2.0 * var);
        }
        ll
    }
}

impl FittedModel for NbFitted {
    fn family(&self) -> &'static str {
        "nb"
    }

    fn predict_proba(&self, x: &Mat) -> Result<Mat> {
        if x.n_cols() != self.mean[0].len() {
            return Err(Error::Dimension { expected: self.mean[0].len(), got: x.n_cols() });
        }
        let p1 = (0..x.n_rows())
            .map(|r| {
                let l0 = self.log_likelihood(0, x.row(r));
                let l1 = self.log_likelihood(1, x.row(r));
                let m = l0.max(l1);
                let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
                e1 / (e0 + e1)
            })
            .collect();
        Ok(binary_proba(p1))
    }

    fn parameters_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("nb serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_variance_midpoint_boundary() {
        // Two well-separated 1-D Gaussians with equal priors and spread:
        // the decision flips at the midpoint.
        let x = Mat::from_rows(&[
            vec![-2.1],
            vec![-1.9],
            vec![-2.0],
            vec![1.9],
            vec![2.1],
            vec![2.0],
        ]);
        let y = vec![0, 0, 0, 1, 1, 1];
        let m = NbParams::default().fit(&x, &y, 0).unwrap();
        let probe = Mat::from_rows(&[vec![-0.1], vec![0.1], vec![0.0]]);
        let p = m.predict_proba(&probe).unwrap();
        assert!(p.get(0, 0) > 0.5);
        assert!(p.get(1, 1) > 0.5);
        assert!((p.get(2, 1) - 0.5).abs() < 1e-9, "midpoint p1 = {}", p.get(2, 1));
    }

    #[test]
    fn posterior_matches_explicit_bayes_arithmetic() {
        let x = Mat::from_rows(&[vec![0.0], vec![2.0], vec![6.0], vec![8.0]]);
        let y = vec![0, 0, 1, 1];
        let params = NbParams { var_smoothing: 0.0 };
        let m = params.fit(&x, &y, 0).unwrap();

        // Hand computation: class 0 ~ N(1, 1), class 1 ~ N(7, 1)
        // (population variance of {0,2} and {6,8} is 1), priors 1/2.
        let probe = 3.0f64;
        let pdf = |mu: f64| (-(probe - mu) * (probe - mu) / 2.0).exp();
        let want = pdf(7.0) / (pdf(1.0) + pdf(7.0));
        let p = m.predict_proba(&Mat::from_rows(&[vec![probe]])).unwrap();
        assert!((p.get(0, 1) - want).abs() < 1e-12, "{} vs {want}", p.get(0, 1));
    }

    #[test]
    fn singleton_class_is_rejected() {
        let x = Mat::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
        assert!(NbParams::default().fit(&x, &[0, 0, 1], 0).is_err());
    }

    #[test]
    fn variance_floor_keeps_constant_features_finite() {
        let x = Mat::from_rows(&[
            vec![1.0, -3.0],
            vec![1.0, -2.0],
            vec![1.0, 3.0],
            vec![1.0, 2.0],
        ]);
        let y = vec![0, 0, 1, 1];
        let m = NbParams::default().fit(&x, &y, 0).unwrap();
        let p = m.predict_proba(&x).unwrap();
        assert!(p.data().iter().all(|v| v.is_finite()));
    }
}
