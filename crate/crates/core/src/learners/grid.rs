//! Exhaustive grid search with stratified (optionally group-aware)
//! cross-validation.

use super::pipeline::PipelineSpec;
use crate::error::{Error, Result};
use crate::eval::{grouped_stratified_kfold, stratified_kfold};
use crate::matrix::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub index: usize,
    pub description: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub cost_proxy: f64,
    /// 1-based position under the selection ordering.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best_index: usize,
    pub cells: Vec<GridCell>,
    pub wall_seconds: f64,
}

impl GridSearchResult {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best_index]
    }
}

fn cell_fit_seed(seed: u64, cell: usize, fold: usize) -> u64 {
    seed.wrapping_mul(0x100_0000_01b3).wrapping_add(((cell as u64) << 16) | fold as u64)
}

/// Scores every candidate by stratified K-fold accuracy. The best cell
/// has the highest mean accuracy; exact ties break toward the lower
/// static inference-cost proxy, then grid order. Wall time is reported
/// for the whole search.
pub fn grid_search(
    candidates: &[PipelineSpec],
    x: &Mat,
    y: &[usize],
    groups: Option<&[String]>,
    k: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if candidates.is_empty() {
        return Err(Error::Validation("grid must contain at least one candidate".into()));
    }
    let started = Instant::now();
    let fold_of = match groups {
        Some(g) => grouped_stratified_kfold(y, g, k, seed)?,
        None => stratified_kfold(y, k, seed)?,
    };
    let n = x.n_rows();
    let fold_splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|fold| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold_of[i] == fold).collect();
            (train, test)
        })
        .collect();

    // Independent (cell, fold) tasks; indexed collect keeps determinism.
    let tasks: Vec<(usize, usize)> =
        (0..candidates.len()).flat_map(|c| (0..k).map(move |f| (c, f))).collect();
    let accuracies: Vec<Result<f64>> = tasks
        .par_iter()
        .map(|&(cell, fold)| {
            let (train, test) = &fold_splits[fold];
            let y_tr: Vec<usize> = train.iter().map(|&i| y[i]).collect();
            let fitted =
                candidates[cell].fit(&x.select_rows(train), &y_tr, cell_fit_seed(seed, cell, fold))?;
            let pred = fitted.predict(&x.select_rows(test))?;
            let correct = pred.iter().zip(test.iter()).filter(|(p, &i)| **p == y[i]).count();
            Ok(correct as f64 / test.len() as f64)
        })
        .collect();

    let mut cells = Vec::with_capacity(candidates.len());
    for (ci, candidate) in candidates.iter().enumerate() {
        let mut fold_accuracies = Vec::with_capacity(k);
        for fi in 0..k {
            match &accuracies[ci * k + fi] {
                Ok(a) => fold_accuracies.push(*a),
                Err(e) => {
                    return Err(Error::Convergence(format!(
                        "grid cell {ci} failed on fold {fi}: {e}"
                    )))
                }
            }
        }
        let mean = fold_accuracies.iter().sum::<f64>() / k as f64;
        let var =
            fold_accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / k as f64;
        cells.push(GridCell {
            index: ci,
            description: format!(
                "{}{}{}",
                candidate.learner.family(),
                match candidate.pca_components {
                    Some(k) => format!(" pca={k}"),
                    None => String::new(),
                },
                format_args!(" {}", compact_hp(&candidate.learner.hyperparams_json())),
            ),
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
            fold_accuracies,
            cost_proxy: candidate.learner.cost_proxy(),
            rank: 0,
        });
    }

    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| {
        cells[b]
            .mean_accuracy
            .partial_cmp(&cells[a].mean_accuracy)
            .unwrap()
            .then(cells[a].cost_proxy.partial_cmp(&cells[b].cost_proxy).unwrap())
            .then(a.cmp(&b))
    });
    for (pos, &i) in order.iter().enumerate() {
        cells[i].rank = pos + 1;
    }
    Ok(GridSearchResult { best_index: order[0], cells, wall_seconds: started.elapsed().as_secs_f64() })
}

fn compact_hp(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Object(map) => map
            .iter()
            .filter(|(k, _)| *k != "family")
            .map(|(k, val)| format!("{k}={}", compact_hp(val)))
            .collect::<Vec<_>>()
            .join(","),
        other => other.to_string().trim_matches('"').to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{KnnParams, LearnerSpec};
    use crate::util::seeded_rng;
    use rand::Rng;

    fn dataset(n: usize, seed: u64) -> (Mat, Vec<usize>) {
        let mut rng = seeded_rng(seed, 0);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let cls = i % 2;
            let c = if cls == 1 { 1.0 } else { -1.0 };
            rows.push(vec![c + rng.random_range(-0.9..0.9), rng.random_range(-1.0..1.0)]);
            y.push(cls);
        }
        (Mat::from_rows(&rows), y)
    }

    fn knn_spec(k: usize) -> PipelineSpec {
        PipelineSpec::new(LearnerSpec::Knn(KnnParams { n_neighbors: k, ..Default::default() }))
    }

    #[test]
    fn single_candidate_grid_returns_it() {
        let (x, y) = dataset(40, 1);
        let r = grid_search(&[knn_spec(3)], &x, &y, None, 4, 9).unwrap();
        assert_eq!(r.best_index, 0);
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].rank, 1);
        assert!(r.wall_seconds >= 0.0);
    }

    #[test]
    fn best_equals_exhaustively_recomputed_max() {
        let (x, y) = dataset(60, 2);
        let grid: Vec<PipelineSpec> = [1usize, 3, 5, 9, 15].iter().map(|&k| knn_spec(k)).collect();
        let r = grid_search(&grid, &x, &y, None, 5, 3).unwrap();

        // Independent recomputation of every cell.
        let fold_of = stratified_kfold(&y, 5, 3).unwrap();
        for (ci, spec) in grid.iter().enumerate() {
            let mut accs = Vec::new();
            for fold in 0..5 {
                let tr: Vec<usize> = (0..60).filter(|&i| fold_of[i] != fold).collect();
                let te: Vec<usize> = (0..60).filter(|&i| fold_of[i] == fold).collect();
                let ytr: Vec<usize> = tr.iter().map(|&i| y[i]).collect();
                let fitted = spec
                    .fit(&x.select_rows(&tr), &ytr, cell_fit_seed(3, ci, fold))
                    .unwrap();
                let pred = fitted.predict(&x.select_rows(&te)).unwrap();
                let acc = pred.iter().zip(te.iter()).filter(|(p, &i)| **p == y[i]).count() as f64
                    / te.len() as f64;
                accs.push(acc);
            }
            let mean = accs.iter().sum::<f64>() / 5.0;
            assert!((mean - r.cells[ci].mean_accuracy).abs() < 1e-12, "cell {ci}");
        }
        let best_mean = r.cells.iter().map(|c| c.mean_accuracy).fold(0.0, f64::max);
        assert_eq!(r.cells[r.best_index].mean_accuracy, best_mean);
    }

    #[test]
    fn exact_ties_prefer_cheaper_candidate() {
        // Perfectly separated data: every k scores 100%, so the smallest
        // k (cheapest cost proxy) must win.
        let rows: Vec<Vec<f64>> =
            (0..24).map(|i| vec![if i % 2 == 1 { 10.0 } else { -10.0 }]).collect();
        let y: Vec<usize> = (0..24).map(|i| i % 2).collect();
        let x = Mat::from_rows(&rows);
        let grid = vec![knn_spec(7), knn_spec(3), knn_spec(5)];
        let r = grid_search(&grid, &x, &y, None, 3, 1).unwrap();
        assert_eq!(r.best_index, 1, "{:?}", r.cells);
    }

    #[test]
    fn infeasible_fold_count_is_rejected() {
        let (x, _) = dataset(10, 4);
        let y = vec![1, 0, 0, 0, 0, 0, 0, 0, 0, 0];
        assert!(grid_search(&[knn_spec(1)], &x, &y, None, 3, 0).is_err());
    }

    #[test]
    fn grid_search_is_deterministic() {
        let (x, y) = dataset(40, 5);
        let grid = vec![knn_spec(1), knn_spec(3)];
        let a = grid_search(&grid, &x, &y, None, 4, 7).unwrap();
        let b = grid_search(&grid, &x, &y, None, 4, 7).unwrap();
        assert_eq!(a.best_index, b.best_index);
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert_eq!(ca.fold_accuracies, cb.fold_accuracies);
        }
    }
}
