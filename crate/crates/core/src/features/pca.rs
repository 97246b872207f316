//! PCA by explicit eigendecomposition of the sample covariance matrix
//! (cyclic Jacobi rotations; feature counts here are at most a few dozen).

use crate::error::{Error, Result};
use crate::matrix::Mat;
use serde::{Deserialize, Serialize};

const PCA_VERSION: u32 = 1;

/// Eigenvalues below `RANK_TOL * max_eigenvalue` count as numerically zero.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub version: u32,
    pub mean: Vec<f64>,
    /// k × d, rows orthonormal; sign fixed so the largest-magnitude entry
    /// of each row is positive.
    pub components: Mat,
    /// Non-increasing, one per retained component; zero-padded when the
    /// input rank is below k.
    pub explained_variance_ratio: Vec<f64>,
    /// Total explained variance = sum of the retained ratios.
    pub tev: f64,
    /// Set when k exceeded the numeric rank of the input.
    pub rank_deficient: bool,
}

/// Symmetric eigendecomposition via cyclic Jacobi. Returns eigenvalues
/// and the matching eigenvectors as rows, sorted by descending eigenvalue.
fn jacobi_eigh(a: &Mat) -> (Vec<f64>, Mat) {
    let d = a.n_rows();
    assert_eq!(d, a.n_cols());
    let mut m = a.clone();
    // Eigenvector accumulator, starts as identity; rows become vectors.
    let mut v = Mat::zeros(d, d);
    for i in 0..d {
        v.set(i, i, 1.0);
    }

    let off = |m: &Mat| -> f64 {
        let mut s = 0.0;
        for p in 0..d {
            for q in (p + 1)..d {
                s += m.get(p, q) * m.get(p, q);
            }
        }
        s
    };
    let scale: f64 = (0..d).map(|i| m.get(i, i).abs()).fold(1e-300, f64::max);
    let tol = (scale * scale) * 1e-30;

    for _sweep in 0..100 {
        if off(&m) <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Rotate rows/columns p and q of the symmetric matrix.
                for i in 0..d {
                    let mip = m.get(i, p);
                    let miq = m.get(i, q);
                    m.set(i, p, c * mip - s * miq);
                    m.set(i, q, s * mip + c * miq);
                }
                for i in 0..d {
                    let mpi = m.get(p, i);
                    let mqi = m.get(q, i);
                    m.set(p, i, c * mpi - s * mqi);
                    m.set(q, i, s * mpi + c * mqi);
                }
                // Accumulate the rotation into the eigenvector rows.
                for i in 0..d {
                    let vpi = v.get(p, i);
                    let vqi = v.get(q, i);
                    v.set(p, i, c * vpi - s * vqi);
                    v.set(q, i, s * vpi + c * vqi);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    let eig: Vec<f64> = (0..d).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| eig[j].partial_cmp(&eig[i]).unwrap());
    let sorted_eig: Vec<f64> = order.iter().map(|&i| eig[i]).collect();
    let mut rows = Mat::zeros(d, d);
    for (r, &i) in order.iter().enumerate() {
        rows.row_mut(r).copy_from_slice(v.row(i));
    }
    (sorted_eig, rows)
}

/// Fits a k-component PCA: mean-centering, sample covariance, top-k
/// eigenvectors by eigenvalue.
pub fn pca_fit(x: &Mat, k: usize) -> Result<PcaModel> {
    let (n, d) = (x.n_rows(), x.n_cols());
    if k == 0 || k > d {
        return Err(Error::Validation(format!("k must lie in [1, d = {d}], got {k}")));
    }
    if n <= k {
        return Err(Error::Data(format!("PCA needs more rows ({n}) than components ({k})")));
    }

    let mean = x.column_means();
    let mut cov = Mat::zeros(d, d);
    for row in x.rows_iter() {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                let v = cov.get(i, j) + di * (row[j] - mean[j]);
                cov.set(i, j, v);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov.get(i, j) / denom;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    let total_var: f64 = (0..d).map(|i| cov.get(i, i)).sum();

    let (eig, vectors) = jacobi_eigh(&cov);
    let max_eig = eig.first().copied().unwrap_or(0.0).max(0.0);

    let mut components = Mat::zeros(k, d);
    let mut ratios = Vec::with_capacity(k);
    let mut rank_deficient = false;
    for i in 0..k {
        let lambda = eig[i];
        let effective = if lambda <= RANK_TOL * max_eig.max(1e-300) {
            rank_deficient = true;
            0.0
        } else {
            lambda
        };
        ratios.push(if total_var > 0.0 { effective / total_var } else { 0.0 });

        let mut row = vectors.row(i).to_vec();
        // Sign convention: largest-magnitude entry positive.
        let mut arg = 0usize;
        for (j, v) in row.iter().enumerate() {
            if v.abs() > row[arg].abs() {
                arg = j;
            }
        }
        if row[arg] < 0.0 {
            row.iter_mut().for_each(|v| *v = -*v);
        }
        components.row_mut(i).copy_from_slice(&row);
    }
    if total_var <= 0.0 {
        rank_deficient = true;
    }

    let tev = ratios.iter().sum();
    Ok(PcaModel {
        version: PCA_VERSION,
        mean,
        components,
        explained_variance_ratio: ratios,
        tev,
        rank_deficient,
    })
}

/// Projects rows onto the retained components: (X - mean) · componentsᵀ.
pub fn pca_transform(model: &PcaModel, x: &Mat) -> Result<Mat> {
    let d = model.mean.len();
    if x.n_cols() != d {
        return Err(Error::Dimension { expected: d, got: x.n_cols() });
    }
    let k = model.components.n_rows();
    let mut out = Mat::zeros(x.n_rows(), k);
    let mut centered = vec![0.0f64; d];
    for r in 0..x.n_rows() {
        let row = x.row(r);
        for (c, v) in centered.iter_mut().enumerate() {
            *v = row[c] - model.mean[c];
        }
        let orow = out.row_mut(r);
        for i in 0..k {
            orow[i] = model.components.row(i).iter().zip(&centered).map(|(a, b)| a * b).sum();
        }
    }
    Ok(out)
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.n_rows()
    }

    /// Back-projection; exact inverse when k = d.
    pub fn inverse_transform(&self, y: &Mat) -> Result<Mat> {
        let k = self.components.n_rows();
        if y.n_cols() != k {
            return Err(Error::Dimension { expected: k, got: y.n_cols() });
        }
        let d = self.mean.len();
        let mut out = Mat::zeros(y.n_rows(), d);
        for r in 0..y.n_rows() {
            let yrow = y.row(r);
            let orow = out.row_mut(r);
            for c in 0..d {
                let mut acc = self.mean[c];
                for i in 0..k {
                    acc += yrow[i] * self.components.get(i, c);
                }
                orow[c] = acc;
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("PCA model serializes")
    }

    pub fn from_json(s: &str) -> Result<PcaModel> {
        let m: PcaModel = serde_json::from_str(s)?;
        if m.version != PCA_VERSION {
            return Err(Error::Serde(format!("unsupported PCA version {}", m.version)));
        }
        Ok(m)
    }
}
