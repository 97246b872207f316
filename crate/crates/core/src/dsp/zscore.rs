//! Per-column z-score standardization (population standard deviation).

use crate::error::{Error, Result};
use crate::matrix::Mat;
use serde::{Deserialize, Serialize};

const SCALER_VERSION: u32 = 1;

/// Fitted standardizer. Columns whose population std falls below
/// `epsilon` are treated as constant and map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub version: u32,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub epsilon: f64,
}

impl Scaler {
    pub fn fit(x: &Mat) -> Result<Scaler> {
        if x.n_rows() < 2 {
            return Err(Error::Data(format!(
                "z-score fit needs at least 2 rows, got {}",
                x.n_rows()
            )));
        }
        let mean = x.column_means();
        let n = x.n_rows() as f64;
        let mut var = vec![0.0; x.n_cols()];
        for row in x.rows_iter() {
            for (c, (&v, &m)) in row.iter().zip(&mean).enumerate() {
                let d = v - m;
                var[c] += d * d;
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt()).collect();
        Ok(Scaler { version: SCALER_VERSION, mean, std, epsilon: 1e-12 })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// True per column if it was constant at fit time.
    pub fn constant_columns(&self) -> Vec<bool> {
        self.std.iter().map(|&s| s < self.epsilon).collect()
    }

    pub fn transform(&self, x: &Mat) -> Result<Mat> {
        self.check_dims(x)?;
        let mut out = x.clone();
        for r in 0..out.n_rows() {
            let row = out.row_mut(r);
            for (c, v) in row.iter_mut().enumerate() {
                *v = if self.std[c] < self.epsilon {
                    0.0
                } else {
                    (*v - self.mean[c]) / self.std[c]
                };
            }
        }
        Ok(out)
    }

    /// Inverse of `transform` for non-constant columns; constant columns
    /// map back to their fitted mean.
    pub fn inverse_transform(&self, x: &Mat) -> Result<Mat> {
        self.check_dims(x)?;
        let mut out = x.clone();
        for r in 0..out.n_rows() {
            let row = out.row_mut(r);
            for (c, v) in row.iter_mut().enumerate() {
                *v = if self.std[c] < self.epsilon {
                    self.mean[c]
                } else {
                    *v * self.std[c] + self.mean[c]
                };
            }
        }
        Ok(out)
    }

    fn check_dims(&self, x: &Mat) -> Result<()> {
        if x.n_cols() != self.mean.len() {
            return Err(Error::Dimension { expected: self.mean.len(), got: x.n_cols() });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scaler serializes")
    }

    pub fn from_json(s: &str) -> Result<Scaler> {
        let scaler: Scaler = serde_json::from_str(s)?;
        if scaler.version != SCALER_VERSION {
            return Err(Error::Serde(format!(
                "unsupported scaler version {}",
                scaler.version
            )));
        }
        if scaler.mean.len() != scaler.std.len() {
            return Err(Error::Serde("scaler mean/std length mismatch".into()));
        }
        Ok(scaler)
    }
}
