//! RBF-kernel SVM trained by sequential minimal optimization, with Platt
//! scaling fitted on out-of-fold decision values for probability output.

use super::{binary_proba, check_binary_labels, FittedModel, Learner};
use crate::error::{Error, Result};
use crate::matrix::{sq_dist, Mat};
use crate::util::seeded_rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaParam {
    /// 1 / d.
    Auto,
    /// 1 / (d · Var(X)), variance over all entries.
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: GammaParam,
    /// Only the RBF kernel is supported.
    pub kernel: String,
    /// SMO stopping tolerance on the maximal KKT violating pair.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 10.0, gamma: GammaParam::Auto, kernel: "rbf".into(), tol: 1e-4, max_iter: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmFitted {
    pub params: SvmParams,
    pub gamma_value: f64,
    /// Support vectors (rows) with their signed dual coefficients α·y.
    pub support_vectors: Mat,
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Platt sigmoid: P(y=1 | f) = 1 / (1 + exp(a·f + b)).
    pub platt_a: f64,
    pub platt_b: f64,
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

fn resolve_gamma(gamma: GammaParam, x: &Mat) -> f64 {
    match gamma {
        GammaParam::Auto => 1.0 / x.n_cols() as f64,
        GammaParam::Scale => {
            let n = (x.n_rows() * x.n_cols()) as f64;
            let mean: f64 = x.data().iter().sum::<f64>() / n;
            let var: f64 = x.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            1.0 / (x.n_cols() as f64 * var.max(1e-12))
        }
        GammaParam::Value(v) => v,
    }
}

/// Dual solution of the soft-margin problem.
struct SmoSolution {
    alpha: Vec<f64>,
    bias: f64,
    converged: bool,
    /// Remaining maximal-violating-pair gap (diagnostic for the
    /// non-convergence error path).
    final_gap: f64,
}

/// SMO with maximal-violating-pair working-set selection. Kernel rows
/// are cached lazily; only rows of selected pairs are ever computed.
fn solve_smo(x: &Mat, y_signed: &[f64], c: f64, gamma: f64, tol: f64, max_iter: usize) -> SmoSolution {
    let n = x.n_rows();
    let mut alpha = vec![0.0f64; n];
    // Gradient of the dual objective; with alpha = 0 it is -1 everywhere.
    let mut grad = vec![-1.0f64; n];
    let mut kernel_cache: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut converged = false;
    let mut final_gap = f64::INFINITY;

    macro_rules! kernel_row {
        ($cache:expr, $i:expr) => {{
            if $cache[$i].is_none() {
                let row: Vec<f64> = (0..n).map(|t| rbf(x.row($i), x.row(t), gamma)).collect();
                $cache[$i] = Some(row);
            }
            $cache[$i].as_ref().unwrap()
        }};
    }

    for _iter in 0..max_iter {
        // Maximal violating pair.
        let mut m_val = f64::NEG_INFINITY;
        let mut m_idx = usize::MAX;
        let mut mm_val = f64::INFINITY;
        let mut mm_idx = usize::MAX;
        for t in 0..n {
            let v = -y_signed[t] * grad[t];
            let in_up = (y_signed[t] > 0.0 && alpha[t] < c) || (y_signed[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y_signed[t] > 0.0 && alpha[t] > 0.0) || (y_signed[t] < 0.0 && alpha[t] < c);
            if in_up && v > m_val {
                m_val = v;
                m_idx = t;
            }
            if in_low && v < mm_val {
                mm_val = v;
                mm_idx = t;
            }
        }
        final_gap = m_val - mm_val;
        if m_idx == usize::MAX || mm_idx == usize::MAX || final_gap < tol {
            converged = true;
            break;
        }
        let (i, j) = (m_idx, mm_idx);

        let kii = kernel_row!(kernel_cache, i)[i];
        let kjj = kernel_row!(kernel_cache, j)[j];
        let kij = kernel_cache[i].as_ref().unwrap()[j];
        let quad = (kii + kjj - 2.0 * kij).max(1e-12);
        let mut step = (m_val - mm_val) / quad;

        // Box constraints for alpha_i + y_i*step, alpha_j - y_j*step.
        let (lo_i, hi_i) = if y_signed[i] > 0.0 { (-alpha[i], c - alpha[i]) } else { (alpha[i] - c, alpha[i]) };
        let (lo_j, hi_j) = if y_signed[j] > 0.0 { (alpha[j] - c, alpha[j]) } else { (-alpha[j], c - alpha[j]) };
        let lo = lo_i.max(lo_j);
        let hi = hi_i.min(hi_j);
        step = step.clamp(lo, hi);
        if step == 0.0 {
            converged = true;
            break;
        }

        alpha[i] += y_signed[i] * step;
        alpha[j] -= y_signed[j] * step;
        alpha[i] = alpha[i].clamp(0.0, c);
        alpha[j] = alpha[j].clamp(0.0, c);

        let ki = kernel_cache[i].as_ref().unwrap().clone();
        let kj = kernel_cache[j].as_ref().unwrap().clone();
        for t in 0..n {
            grad[t] += y_signed[t] * step * (ki[t] - kj[t]);
        }
    }

    // Bias from free support vectors, midpoint fallback.
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if alpha[t] > 1e-9 && alpha[t] < c - 1e-9 {
            free_sum += -y_signed[t] * grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let mut m_val = f64::NEG_INFINITY;
        let mut mm_val = f64::INFINITY;
        for t in 0..n {
            let v = -y_signed[t] * grad[t];
            let in_up = (y_signed[t] > 0.0 && alpha[t] < c) || (y_signed[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y_signed[t] > 0.0 && alpha[t] > 0.0) || (y_signed[t] < 0.0 && alpha[t] < c);
            if in_up {
                m_val = m_val.max(v);
            }
            if in_low {
                mm_val = mm_val.min(v);
            }
        }
        (m_val + mm_val) / 2.0
    };

    SmoSolution { alpha, bias, converged, final_gap }
}

fn decision_values(x_train: &Mat, y_signed: &[f64], alpha: &[f64], bias: f64, gamma: f64, queries: &Mat) -> Vec<f64> {
    (0..queries.n_rows())
        .map(|q| {
            let mut f = bias;
            for t in 0..x_train.n_rows() {
                if alpha[t] > 0.0 {
                    f += alpha[t] * y_signed[t] * rbf(x_train.row(t), queries.row(q), gamma);
                }
            }
            f
        })
        .collect()
}

/// Platt sigmoid fit (robust Newton with backtracking).
fn fit_platt(decision: &[f64], y: &[usize]) -> (f64, f64) {
    let n1 = y.iter().filter(|&&v| v == 1).count() as f64;
    let n0 = y.len() as f64 - n1;
    let hi = (n1 + 1.0) / (n1 + 2.0);
    let lo = 1.0 / (n0 + 2.0);
    let targets: Vec<f64> = y.iter().map(|&v| if v == 1 { hi } else { lo }).collect();

    let mut a = 0.0f64;
    let mut b = ((n0 + 1.0) / (n1 + 1.0)).ln();
    let objective = |a: f64, b: f64| -> f64 {
        decision
            .iter()
            .zip(&targets)
            .map(|(&f, &t)| {
                let z = a * f + b;
                if z >= 0.0 {
                    t * z + (-z).exp().ln_1p()
                } else {
                    (t - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };
    let mut fval = objective(a, b);
    let sigma = 1e-12;

    for _ in 0..100 {
        let (mut h11, mut h22, mut h21) = (sigma, sigma, 0.0f64);
        let (mut g1, mut g2) = (0.0f64, 0.0f64);
        for (&f, &t) in decision.iter().zip(&targets) {
            let z = a * f + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut stepsize = 1.0f64;
        let mut moved = false;
        while stepsize >= 1e-10 {
            let (na, nb) = (a + stepsize * da, b + stepsize * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * stepsize * gd {
                a = na;
                b = nb;
                fval = nf;
                moved = true;
                break;
            }
            stepsize /= 2.0;
        }
        if !moved {
            break;
        }
    }
    (a, b)
}

impl Learner for SvmParams {
    fn family(&self) -> &'static str {
        "svm"
    }

    fn fit(&self, x: &Mat, y: &[usize], seed: u64) -> Result<Box<dyn FittedModel>> {
        check_binary_labels(y)?;
        if self.kernel != "rbf" {
            return Err(Error::Validation(format!("unsupported kernel '{}'", self.kernel)));
        }
        if y.iter().all(|&v| v == 0) || y.iter().all(|&v| v == 1) {
            return Err(Error::Validation("SVM needs both classes in the training set".into()));
        }
        let gamma = resolve_gamma(self.gamma, x);
        let y_signed: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();

        // Out-of-fold decision values for the Platt sigmoid.
        let n = x.n_rows();
        let minority = y.iter().filter(|&&v| v == 1).count().min(y.iter().filter(|&&v| v == 0).count());
        let folds = minority.min(5);
        let mut oof = vec![f64::NAN; n];
        if folds >= 2 {
            let mut assignment = vec![0usize; n];
            let mut rng = seeded_rng(seed, 101);
            for class in [0usize, 1] {
                let mut idx: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
                idx.shuffle(&mut rng);
                for (pos, &i) in idx.iter().enumerate() {
                    assignment[i] = pos % folds;
                }
            }
            for fold in 0..folds {
                let train_idx: Vec<usize> = (0..n).filter(|&i| assignment[i] != fold).collect();
                let test_idx: Vec<usize> = (0..n).filter(|&i| assignment[i] == fold).collect();
                let xf = x.select_rows(&train_idx);
                let yf: Vec<f64> = train_idx.iter().map(|&i| y_signed[i]).collect();
                let sol = solve_smo(&xf, &yf, self.c, gamma, self.tol, self.max_iter);
                let dv = decision_values(&xf, &yf, &sol.alpha, sol.bias, gamma, &x.select_rows(&test_idx));
                for (&i, v) in test_idx.iter().zip(dv) {
                    oof[i] = v;
                }
            }
        }

        let solution = solve_smo(x, &y_signed, self.c, gamma, self.tol, self.max_iter);
        if !solution.converged {
            // The error carries the best iterate's diagnostics so callers
            // can judge how far the solver got.
            let n_sv = solution.alpha.iter().filter(|&&a| a > 1e-12).count();
            return Err(Error::Convergence(format!(
                "SMO stopped at KKT gap {:.3e} (tolerance {}) after {} iterations;                  best iterate has {n_sv} support vectors, bias {:.6}",
                solution.final_gap, self.tol, self.max_iter, solution.bias
            )));
        }

        let platt_input: Vec<f64> = if folds >= 2 {
            oof
        } else {
            decision_values(x, &y_signed, &solution.alpha, solution.bias, gamma, x)
        };
        let (platt_a, platt_b) = fit_platt(&platt_input, y);

        // Keep only support vectors.
        let sv_idx: Vec<usize> = (0..n).filter(|&i| solution.alpha[i] > 1e-12).collect();
        let support_vectors = x.select_rows(&sv_idx);
        let dual_coef: Vec<f64> = sv_idx.iter().map(|&i| solution.alpha[i] * y_signed[i]).collect();

        Ok(Box::new(SvmFitted {
            params: self.clone(),
            gamma_value: gamma,
            support_vectors,
            dual_coef,
            bias: solution.bias,
            platt_a,
            platt_b,
        }))
    }
}

impl SvmFitted {
    /// Signed distance-like decision value f(x) = Σ αᵢyᵢK(xᵢ, x) + b.
    pub fn decision_function(&self, x: &Mat) -> Result<Vec<f64>> {
        if x.n_cols() != self.support_vectors.n_cols() {
            return Err(Error::Dimension { expected: self.support_vectors.n_cols(), got: x.n_cols() });
        }
        Ok((0..x.n_rows())
            .map(|q| {
                let mut f = self.bias;
                for (t, &coef) in self.dual_coef.iter().enumerate() {
                    f += coef * rbf(self.support_vectors.row(t), x.row(q), self.gamma_value);
                }
                f
            })
            .collect())
    }
}

impl FittedModel for SvmFitted {
    fn family(&self) -> &'static str {
        "svm"
    }

    fn predict_proba(&self, x: &Mat) -> Result<Mat> {
        let p1: Vec<f64> = self
            .decision_function(x)?
            .into_iter()
            .map(|f| {
                let z = self.platt_a * f + self.platt_b;
                if z >= 0.0 {
                    let e = (-z).exp();
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + z.exp())
                }
            })
            .collect();
        Ok(binary_proba(p1))
    }

    fn parameters_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("svm serializes")
    }
}

/// Maximum KKT violation of a fitted decision function over its training
/// set, for the solver-correctness audits:
/// α=0 ⇒ y·f ≥ 1-τ; 0<α<C ⇒ |y·f - 1| ≤ τ; α=C ⇒ y·f ≤ 1+τ.
pub fn kkt_max_violation(x: &Mat, y: &[usize], alpha: &[f64], f: &[f64], c: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.n_rows() {
        let ys = if y[i] == 1 { 1.0 } else { -1.0 };
        let margin = ys * f[i];
        let v = if alpha[i] <= 1e-9 {
            (1.0 - margin).max(0.0)
        } else if alpha[i] >= c - 1e-9 {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// Runs SMO directly and returns (alpha, decision values on the training
/// set); test-facing hook for the KKT audits.
pub fn smo_fit_raw(x: &Mat, y: &[usize], c: f64, gamma: f64, tol: f64) -> (Vec<f64>, Vec<f64>) {
    let y_signed: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let sol = solve_smo(x, &y_signed, c, gamma, tol, 500_000);
    let f = decision_values(x, &y_signed, &sol.alpha, sol.bias, gamma, x);
    (sol.alpha, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::predict_from_proba;
    use crate::util::seeded_rng;
    use rand::Rng;

    #[test]
    fn two_point_midpoint_has_zero_decision_value() {
        let x = Mat::from_rows(&[vec![-1.0], vec![1.0]]);
        let y = vec![0, 1];
        // Decision values at the two training points are antisymmetric.
        let (_, f) = smo_fit_raw(&x, &y, 1.0, 1.0, 1e-6);
        assert!((f[0] + f[1]).abs() < 1e-6, "f = {f:?}");

        let m = SvmParams { c: 1.0, ..SvmParams::default() }.fit(&x, &y, 0).unwrap();
        let fitted: SvmFitted = serde_json::from_value(m.parameters_json()).unwrap();
        let mid = fitted.decision_function(&Mat::from_rows(&[vec![0.0]])).unwrap();
        assert!(mid[0].abs() < 1e-6, "midpoint decision {}", mid[0]);
    }

    fn blobs(n_per: usize, gap: f64, seed: u64) -> (Mat, Vec<usize>) {
        let mut rng = seeded_rng(seed, 0);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..2 * n_per {
            let cls = i % 2;
            let cx = if cls == 1 { gap } else { -gap };
            rows.push(vec![cx + rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
            y.push(cls);
        }
        (Mat::from_rows(&rows), y)
    }

    #[test]
    fn separable_blobs_reach_perfect_training_accuracy_with_valid_kkt() {
        let (x, y) = blobs(30, 2.5, 3);
        let (alpha, f) = smo_fit_raw(&x, &y, 10.0, 0.5, 1e-5);
        let worst = kkt_max_violation(&x, &y, &alpha, &f, 10.0);
        assert!(worst < 1e-3, "KKT violation {worst}");
        let correct = f
            .iter()
            .zip(&y)
            .filter(|(v, &t)| (**v > 0.0) == (t == 1))
            .count();
        assert_eq!(correct, y.len());
    }

    #[test]
    fn platt_probabilities_are_monotone_in_decision_value() {
        let (x, y) = blobs(25, 1.2, 5);
        let m = SvmParams::default().fit(&x, &y, 7).unwrap();
        let probe = blobs(10, 1.2, 11).0;
        let fitted: &SvmFitted = &serde_json::from_value(m.parameters_json()).unwrap();
        let f = fitted.decision_function(&probe).unwrap();
        let p = m.predict_proba(&probe).unwrap();
        let mut pairs: Vec<(f64, f64)> = f.iter().zip((0..probe.n_rows()).map(|r| p.get(r, 1))).map(|(&a, b)| (a, b)).collect();
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in pairs.windows(2) {
            assert!(w[1].1 >= w[0].1 - 1e-12, "Platt map is not monotone");
        }
        // Higher decision value must mean higher positive probability.
        assert!(pairs.last().unwrap().1 > pairs[0].1);
    }

    #[test]
    fn predictions_agree_with_decision_sign() {
        let (x, y) = blobs(20, 2.0, 9);
        let m = SvmParams::default().fit(&x, &y, 1).unwrap();
        let fitted: SvmFitted = serde_json::from_value(m.parameters_json()).unwrap();
        let f = fitted.decision_function(&x).unwrap();
        let pred = predict_from_proba(&m.predict_proba(&x).unwrap());
        for (v, cls) in f.iter().zip(pred) {
            if v.abs() > 1e-6 {
                assert_eq!(*v > 0.0, cls == 1);
            }
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Mat::from_rows(&[vec![0.0], vec![1.0]]);
        assert!(SvmParams::default().fit(&x, &[1, 1], 0).is_err());
    }

    #[test]
    fn gamma_scale_matches_definition() {
        let x = Mat::from_rows(&[vec![0.0, 2.0], vec![4.0, 6.0]]);
        let g = resolve_gamma(GammaParam::Scale, &x);
        // Entries {0,2,4,6}: mean 3, population variance 5; d = 2.
        assert!((g - 1.0 / (2.0 * 5.0)).abs() < 1e-12);
        assert_eq!(resolve_gamma(GammaParam::Auto, &x), 0.5);
    }
}
