//! Brute-force k-nearest-neighbours with Minkowski-p distance.

use super::{binary_proba, check_binary_labels, FittedModel, Learner};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnWeight {
    Uniform,
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnParams {
    pub n_neighbors: usize,
    /// Minkowski exponent (1 = Manhattan, 2 = Euclidean).
    pub p: f64,
    pub weight: KnnWeight,
    /// Neighbour-search strategy; "auto" and "brute" both mean exact
    /// exhaustive search at this scale.
    pub algorithm: String,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { n_neighbors: 5, p: 1.0, weight: KnnWeight::Uniform, algorithm: "auto".into() }
    }
}

impl Learner for KnnParams {
    fn family(&self) -> &'static str {
        "knn"
    }

    fn fit(&self, x: &Mat, y: &[usize], _seed: u64) -> Result<Box<dyn FittedModel>> {
        check_binary_labels(y)?;
        if self.n_neighbors == 0 || self.n_neighbors > x.n_rows() {
            return Err(Error::Validation(format!(
                "n_neighbors must lie in [1, {}], got {}",
                x.n_rows(),
                self.n_neighbors
            )));
        }
        if self.p < 1.0 {
            return Err(Error::Validation(format!("Minkowski p must be >= 1, got {}", self.p)));
        }
        if !matches!(self.algorithm.as_str(), "auto" | "brute") {
            return Err(Error::Validation(format!(
                "unsupported neighbour-search algorithm '{}'",
                self.algorithm
            )));
        }
        Ok(Box::new(KnnFitted { params: self.clone(), train_x: x.clone(), train_y: y.to_vec() }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnFitted {
    pub params: KnnParams,
    pub train_x: Mat,
    pub train_y: Vec<usize>,
}

impl KnnFitted {
    fn minkowski(&self, a: &[f64], b: &[f64]) -> f64 {
        let p = self.params.p;
        if (p - 1.0).abs() < 1e-12 {
            a.iter().zip(b).map(|(x, z)| (x - z).abs()).sum()
        } else if (p - 2.0).abs() < 1e-12 {
            a.iter().zip(b).map(|(x, z)| (x - z) * (x - z)).sum::<f64>().sqrt()
        } else {
            a.iter().zip(b).map(|(x, z)| (x - z).abs().powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    fn vote(&self, query: &[f64]) -> f64 {
        // Equal distances break by training-row index via the sort key.
        let mut dist: Vec<(f64, usize)> = (0..self.train_x.n_rows())
            .map(|i| (self.minkowski(query, self.train_x.row(i)), i))
            .collect();
        dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let neighbors = &dist[..self.params.n_neighbors];
        match self.params.weight {
            KnnWeight::Uniform => {
                let pos = neighbors.iter().filter(|(_, i)| self.train_y[*i] == 1).count();
                pos as f64 / neighbors.len() as f64
            }
            KnnWeight::Distance => {
                // Exact hits dominate: restrict to zero-distance neighbours
                // with uniform weight when any exist.
                let zero: Vec<&(f64, usize)> =
                    neighbors.iter().filter(|(d, _)| *d == 0.0).collect();
                if !zero.is_empty() {
                    let pos = zero.iter().filter(|(_, i)| self.train_y[*i] == 1).count();
                    return pos as f64 / zero.len() as f64;
                }
                let mut wsum = 0.0;
                let mut wpos = 0.0;
                for (d, i) in neighbors {
                    let w = 1.0 / d;
                    wsum += w;
                    if self.train_y[*i] == 1 {
                        wpos += w;
                    }
                }
                wpos / wsum
            }
        }
    }
}

impl FittedModel for KnnFitted {
    fn family(&self) -> &'static str {
        "knn"
    }

    fn predict_proba(&self, x: &Mat) -> Result<Mat> {
        if x.n_rows() == 0 {
            return Err(Error::Data("empty query".into()));
        }
        if x.n_cols() != self.train_x.n_cols() {
            return Err(Error::Dimension { expected: self.train_x.n_cols(), got: x.n_cols() });
        }
        Ok(binary_proba((0..x.n_rows()).map(|r| self.vote(x.row(r))).collect()))
    }

    fn parameters_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("knn serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::predict_from_proba;

    fn toy() -> (Mat, Vec<usize>) {
        let x = Mat::from_rows(&[
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.2],
            vec![1.0, 1.0],
            vec![1.1, 0.9],
            vec![0.9, 1.2],
        ]);
        (x, vec![0, 0, 0, 1, 1, 1])
    }

    #[test]
    fn one_neighbor_on_a_training_point_is_certain() {
        let (x, y) = toy();
        let m = KnnParams { n_neighbors: 1, ..KnnParams::default() }.fit(&x, &y, 0).unwrap();
        let p = m.predict_proba(&x).unwrap();
        for r in 0..x.n_rows() {
            assert_eq!(p.get(r, y[r]), 1.0);
        }
    }

    #[test]
    fn three_nn_matches_exhaustive_sort_oracle() {
        let (x, y) = toy();
        let m = KnnParams { n_neighbors: 3, p: 2.0, ..KnnParams::default() }
            .fit(&x, &y, 0)
            .unwrap();
        let queries = Mat::from_rows(&[vec![0.05, 0.05], vec![1.0, 1.05], vec![0.5, 0.5]]);
        let got = m.predict_proba(&queries).unwrap();

        for q in 0..queries.n_rows() {
            // Brute-force all-pairs oracle.
            let mut d: Vec<(f64, usize)> = (0..x.n_rows())
                .map(|i| {
                    let dd: f64 = x
                        .row(i)
                        .iter()
                        .zip(queries.row(q))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    (dd, i)
                })
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let votes = d[..3].iter().filter(|(_, i)| y[*i] == 1).count();
            assert!((got.get(q, 1) - votes as f64 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn k_larger_than_train_is_rejected() {
        let (x, y) = toy();
        assert!(KnnParams { n_neighbors: 7, ..KnnParams::default() }.fit(&x, &y, 0).is_err());
    }

    #[test]
    fn empty_query_is_rejected() {
        let (x, y) = toy();
        let m = KnnParams::default().fit(&x, &y, 0).unwrap();
        let empty = Mat::zeros(0, 2);
        assert!(m.predict_proba(&empty).is_err());
    }

    #[test]
    fn argmax_is_invariant_under_uniform_positive_rescale() {
        let (x, y) = toy();
        let queries = Mat::from_rows(&[vec![0.2, 0.1], vec![0.8, 0.9], vec![0.45, 0.61]]);
        for p in [1.0, 2.0, 3.0] {
            let params = KnnParams { n_neighbors: 3, p, ..KnnParams::default() };
            let base = params.fit(&x, &y, 0).unwrap().predict_proba(&queries).unwrap();
            let scale = 37.5;
            let xs = Mat::from_rows(
                &(0..x.n_rows())
                    .map(|r| x.row(r).iter().map(|v| v * scale).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            );
            let qs = Mat::from_rows(
                &(0..queries.n_rows())
                    .map(|r| queries.row(r).iter().map(|v| v * scale).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            );
            let scaled = params.fit(&xs, &y, 0).unwrap().predict_proba(&qs).unwrap();
            assert_eq!(predict_from_proba(&base), predict_from_proba(&scaled), "p = {p}");
        }
    }

    #[test]
    fn distance_weighting_handles_exact_hits() {
        let (x, y) = toy();
        let m = KnnParams { n_neighbors: 3, weight: KnnWeight::Distance, ..KnnParams::default() }
            .fit(&x, &y, 0)
            .unwrap();
        let p = m.predict_proba(&x.select_rows(&[3])).unwrap();
        assert_eq!(p.get(0, 1), 1.0);
    }
}
