//! L2-regularized logistic regression, fitted by full-batch Newton
//! iterations to a hard stationarity tolerance. Serves as the stacking
//! meta-learner.

use super::{binary_proba, check_binary_labels, FittedModel, Learner};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::util::seeded_rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

const GRAD_TOL: f64 = 1e-8;
const MAX_NEWTON_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegParams {
    /// L2 penalty λ on the weights (intercept unpenalized); the
    /// objective is mean log-loss + (λ/2)·‖w‖².
    pub l2_strength: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams { l2_strength: 1e-2 }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean log-loss + (λ/2)‖w‖² and its gradient over [w | b], exposed so
/// finite-difference audits can check the exact objective the solver
/// minimizes.
pub fn logreg_objective_and_gradient(
    x: &Mat,
    y: &[usize],
    w: &[f64],
    b: f64,
    lambda: f64,
) -> (f64, Vec<f64>) {
    let n = x.n_rows();
    let mut loss = 0.0;
    for r in 0..n {
        let z = b + x.row(r).iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        loss += z.max(0.0) - z * y[r] as f64 + (-z.abs()).exp().ln_1p();
    }
    loss = loss / n as f64 + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
    (loss, gradient(x, y, w, b, lambda))
}

/// Mean log-loss + (λ/2)‖w‖² gradient over [w | b].
fn gradient(x: &Mat, y: &[usize], w: &[f64], b: f64, lambda: f64) -> Vec<f64> {
    let n = x.n_rows();
    let d = x.n_cols();
    let mut g = vec![0.0f64; d + 1];
    for r in 0..n {
        let row = x.row(r);
        let z = b + row.iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
        let err = (sigmoid(z) - y[r] as f64) / n as f64;
        for c in 0..d {
            g[c] += err * row[c];
        }
        g[d] += err;
    }
    for c in 0..d {
        g[c] += lambda * w[c];
    }
    g
}

/// Solves the symmetric (d+1)² Newton system by Gaussian elimination
/// with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for r in (col + 1)..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut out = vec![0.0f64; n];
    for col in (0..n).rev() {
        let mut acc = rhs[col];
        for c in (col + 1)..n {
            acc -= a[col][c] * out[c];
        }
        out[col] = acc / a[col][col];
    }
    Some(out)
}

impl Learner for LogRegParams {
    fn family(&self) -> &'static str {
        "logreg"
    }

    fn fit(&self, x: &Mat, y: &[usize], _seed: u64) -> Result<Box<dyn FittedModel>> {
        check_binary_labels(y)?;
        if self.l2_strength < 0.0 {
            return Err(Error::Validation("l2_strength must be non-negative".into()));
        }
        let n = x.n_rows();
        let d = x.n_cols();
        if n == 0 {
            return Err(Error::Data("empty training set".into()));
        }
        let lambda = self.l2_strength;
        let mut w = vec![0.0f64; d];
        let mut b = 0.0f64;

        let objective = |w: &[f64], b: f64| -> f64 {
            let mut loss = 0.0;
            for r in 0..n {
                let z = b + x.row(r).iter().zip(w).map(|(a, c)| a * c).sum::<f64>();
                loss += z.max(0.0) - z * y[r] as f64 + (-z.abs()).exp().ln_1p();
            }
            loss / n as f64 + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
        };

        let mut converged = false;
        'newton: for _ in 0..MAX_NEWTON_ITER {
            let g = gradient(x, y, &w, b, lambda);
            if g.iter().all(|v| v.abs() < GRAD_TOL) {
                converged = true;
                break;
            }
            // Hessian: (1/n)·[X 1]ᵀ S [X 1] + λ·diag(1..1, 0), damped for
            // numerically flat regions.
            let mut hess = vec![vec![0.0f64; d + 1]; d + 1];
            for r in 0..n {
                let row = x.row(r);
                let z = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
                let p = sigmoid(z);
                let s = (p * (1.0 - p)).max(1e-12) / n as f64;
                for i in 0..d {
                    for j in i..d {
                        hess[i][j] += s * row[i] * row[j];
                    }
                    hess[i][d] += s * row[i];
                }
                hess[d][d] += s;
            }
            for i in 0..d {
                hess[i][i] += lambda + 1e-12;
                for j in 0..i {
                    hess[i][j] = hess[j][i];
                }
            }
            hess[d][d] += 1e-12;
            for j in 0..d {
                hess[d][j] = hess[j][d];
            }

            let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
            let Some(step) = solve_dense(hess, rhs) else {
                return Err(Error::Convergence("singular Newton system in logistic fit".into()));
            };

            // Backtracking keeps the objective monotone on hard problems.
            let f0 = objective(&w, b);
            let mut t = 1.0f64;
            loop {
                let wt: Vec<f64> = w.iter().zip(&step[..d]).map(|(a, s)| a + t * s).collect();
                let bt = b + t * step[d];
                if objective(&wt, bt) <= f0 + 1e-12 {
                    w = wt;
                    b = bt;
                    break;
                }
                t /= 2.0;
                if t < 1e-12 {
                    // No descent direction left; stop and let the final
                    // stationarity check decide.
                    break 'newton;
                }
            }
        }
        if !converged {
            let g = gradient(x, y, &w, b, lambda);
            if g.iter().any(|v| v.abs() >= GRAD_TOL) {
                return Err(Error::Convergence(format!(
                    "logistic Newton did not reach |grad| < {GRAD_TOL} within {MAX_NEWTON_ITER} iterations"
                )));
            }
        }

        Ok(Box::new(LogRegFitted { params: *self, weights: w, intercept: b }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegFitted {
    pub params: LogRegParams,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl FittedModel for LogRegFitted {
    fn family(&self) -> &'static str {
        "logreg"
    }

    fn predict_proba(&self, x: &Mat) -> Result<Mat> {
        if x.n_cols() != self.weights.len() {
            return Err(Error::Dimension { expected: self.weights.len(), got: x.n_cols() });
        }
        Ok(binary_proba(
            (0..x.n_rows())
                .map(|r| {
                    sigmoid(
                        self.intercept
                            + x.row(r).iter().zip(&self.weights).map(|(a, c)| a * c).sum::<f64>(),
                    )
                })
                .collect(),
        ))
    }

    fn parameters_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("logreg serializes")
    }
}

/// Selects the L2 strength by stratified K-fold accuracy, then refits on
/// everything. Ties prefer the stronger penalty.
pub fn logreg_fit_cv(
    x: &Mat,
    y: &[usize],
    strengths: &[f64],
    k: usize,
    seed: u64,
) -> Result<(LogRegParams, Box<dyn FittedModel>)> {
    if strengths.is_empty() {
        return Err(Error::Validation("need at least one candidate strength".into()));
    }
    let n = x.n_rows();
    let mut assignment = vec![0usize; n];
    {
        let mut rng = seeded_rng(seed, 7001);
        for class in [0usize, 1] {
            let mut idx: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
            idx.shuffle(&mut rng);
            for (pos, &i) in idx.iter().enumerate() {
                assignment[i] = pos % k;
            }
        }
    }

    let mut scored: Vec<(f64, f64)> = Vec::new(); // (accuracy, strength)
    for &lambda in strengths {
        let params = LogRegParams { l2_strength: lambda };
        let mut correct = 0usize;
        let mut total = 0usize;
        for fold in 0..k {
            let tr: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
            let te: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
            if te.is_empty() || tr.is_empty() {
                continue;
            }
            let ytr: Vec<usize> = tr.iter().map(|&i| y[i]).collect();
            let model = params.fit(&x.select_rows(&tr), &ytr, seed)?;
            let proba = model.predict_proba(&x.select_rows(&te))?;
            for (pos, &i) in te.iter().enumerate() {
                total += 1;
                if usize::from(proba.get(pos, 1) > 0.5) == y[i] {
                    correct += 1;
                }
            }
        }
        scored.push((correct as f64 / total.max(1) as f64, lambda));
    }
    let best = scored
        .iter()
        .cloned()
        .max_by(|a, b| {
            a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap())
        })
        .unwrap();
    let params = LogRegParams { l2_strength: best.1 };
    let fitted = params.fit(x, y, seed)?;
    Ok((params, fitted))
}
