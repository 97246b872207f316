//! CART trees: Gini classification and squared-error regression (with
//! Newton leaf values for boosting). Shared by the forest and the
//! gradient booster.

use crate::matrix::Mat;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Class distribution (classification) or scalar value (regression,
    /// stored in slot 0 with slot 1 unused).
    Leaf { value: [f64; 2] },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeOptions {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Number of features examined per split; None = all.
    pub max_features: Option<usize>,
}

impl Default for TreeOptions {
    fn default() -> Self {
        TreeOptions { max_depth: None, min_samples_leaf: 1, min_samples_split: 2, max_features: None }
    }
}

/// Best (threshold, gain) on one feature given target statistics, or None
/// when no admissible split exists. Used for both criteria through the
/// prefix-statistic closure.
struct SplitScan {
    order: Vec<usize>,
}

impl SplitScan {
    fn new(values: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        SplitScan { order }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    pub nodes: Vec<Node>,
}

impl ClassificationTree {
    /// Grows a Gini tree on the rows `idx`. Randomness is used only for
    /// per-node feature subsampling (when `max_features` is set).
    pub fn fit(x: &Mat, y: &[usize], idx: &[usize], opts: &TreeOptions, rng: &mut ChaCha8Rng) -> Self {
        let mut nodes = Vec::new();
        grow_classification(x, y, idx.to_vec(), 0, opts, rng, &mut nodes);
        ClassificationTree { nodes }
    }

    /// Positive-class fraction at the reached leaf.
    pub fn predict_one(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return value[1],
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn grow_classification(
    x: &Mat,
    y: &[usize],
    idx: Vec<usize>,
    depth: usize,
    opts: &TreeOptions,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<Node>,
) -> usize {
    let n = idx.len();
    let pos = idx.iter().filter(|&&i| y[i] == 1).count();
    let make_leaf = |nodes: &mut Vec<Node>| -> usize {
        nodes.push(Node::Leaf { value: [(n - pos) as f64 / n as f64, pos as f64 / n as f64] });
        nodes.len() - 1
    };

    let depth_ok = opts.max_depth.is_none_or(|d| depth < d);
    if !depth_ok || n < opts.min_samples_split || pos == 0 || pos == n {
        return make_leaf(nodes);
    }

    let Some((feature, threshold, _gain)) = best_gini_split(x, y, &idx, opts, rng) else {
        return make_leaf(nodes);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| x.get(i, feature) <= threshold);
    let slot = nodes.len();
    nodes.push(Node::Leaf { value: [0.0, 0.0] }); // placeholder
    let left = grow_classification(x, y, left_idx, depth + 1, opts, rng, nodes);
    let right = grow_classification(x, y, right_idx, depth + 1, opts, rng, nodes);
    nodes[slot] = Node::Split { feature, threshold, left, right };
    slot
}

/// Gini impurity of a (neg, pos) count pair.
fn gini(neg: f64, pos: f64) -> f64 {
    let n = neg + pos;
    if n == 0.0 {
        return 0.0;
    }
    let (p0, p1) = (neg / n, pos / n);
    1.0 - p0 * p0 - p1 * p1
}

/// Gini gain of splitting `idx` at (feature, threshold); the audit oracle
/// recomputes chosen splits through this same arithmetic on explicit
/// partitions.
pub fn gini_gain(x: &Mat, y: &[usize], idx: &[usize], feature: usize, threshold: f64) -> f64 {
    let n = idx.len() as f64;
    let pos_total = idx.iter().filter(|&&i| y[i] == 1).count() as f64;
    let (mut ln, mut lp) = (0.0f64, 0.0f64);
    for &i in idx {
        if x.get(i, feature) <= threshold {
            if y[i] == 1 {
                lp += 1.0;
            } else {
                ln += 1.0;
            }
        }
    }
    let (rn, rp) = (n - pos_total - ln, pos_total - lp);
    let parent = gini(n - pos_total, pos_total);
    let nl = ln + lp;
    let nr = rn + rp;
    if nl == 0.0 || nr == 0.0 {
        return 0.0;
    }
    parent - (nl / n) * gini(ln, lp) - (nr / n) * gini(rn, rp)
}

fn candidate_features(d: usize, opts: &TreeOptions, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match opts.max_features {
        None => (0..d).collect(),
        Some(m) => {
            let mut all: Vec<usize> = (0..d).collect();
            all.shuffle(rng);
            let mut chosen = all[..m.clamp(1, d)].to_vec();
            chosen.sort_unstable();
            chosen
        }
    }
}

fn best_gini_split(
    x: &Mat,
    y: &[usize],
    idx: &[usize],
    opts: &TreeOptions,
    rng: &mut ChaCha8Rng,
) -> Option<(usize, f64, f64)> {
    let n = idx.len();
    let mut best: Option<(f64, usize, f64)> = None; // (gain, feature, threshold)
    for feature in candidate_features(x.n_cols(), opts, rng) {
        let values: Vec<f64> = idx.iter().map(|&i| x.get(i, feature)).collect();
        let scan = SplitScan::new(&values);
        // Prefix class counts in value order.
        let mut ln = 0.0f64;
        let mut lp = 0.0f64;
        let total_pos = idx.iter().filter(|&&i| y[i] == 1).count() as f64;
        let total_neg = n as f64 - total_pos;
        let parent = gini(total_neg, total_pos);
        for (rank, &local) in scan.order.iter().enumerate() {
            if y[idx[local]] == 1 {
                lp += 1.0;
            } else {
                ln += 1.0;
            }
            let next = rank + 1;
            if next == n {
                break;
            }
            let v = values[local];
            let v_next = values[scan.order[next]];
            if v_next <= v {
                continue; // no boundary between equal values
            }
            let nl = next;
            let nr = n - next;
            if nl < opts.min_samples_leaf || nr < opts.min_samples_leaf {
                continue;
            }
            let gain = parent
                - (nl as f64 / n as f64) * gini(ln, lp)
                - (nr as f64 / n as f64) * gini(total_neg - ln, total_pos - lp);
            let threshold = (v + v_next) / 2.0;
            let better = match &best {
                None => gain > 1e-15,
                Some((bg, bf, bt)) => {
                    gain > *bg + 1e-15
                        || ((gain - bg).abs() <= 1e-15
                            && (feature < *bf || (feature == *bf && threshold < *bt)))
                }
            };
            if better {
                best = Some((gain, feature, threshold));
            }
        }
    }
    best.map(|(g, f, t)| (f, t, g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    /// Squared-error splits on `targets`; leaf values are the Newton step
    /// `Σ target / (Σ hessian + eps)`, which reduces to the mean when all
    /// hessians are 1.
    pub fn fit(
        x: &Mat,
        targets: &[f64],
        hessians: &[f64],
        idx: &[usize],
        allowed_features: &[usize],
        opts: &TreeOptions,
    ) -> Self {
        let mut nodes = Vec::new();
        Self::grow(x, targets, hessians, idx.to_vec(), allowed_features, 0, opts, &mut nodes);
        RegressionTree { nodes }
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        x: &Mat,
        targets: &[f64],
        hessians: &[f64],
        idx: Vec<usize>,
        allowed: &[usize],
        depth: usize,
        opts: &TreeOptions,
        nodes: &mut Vec<Node>,
    ) -> usize {
        let n = idx.len();
        let make_leaf = |nodes: &mut Vec<Node>, idx: &[usize]| -> usize {
            let g: f64 = idx.iter().map(|&i| targets[i]).sum();
            let h: f64 = idx.iter().map(|&i| hessians[i]).sum();
            nodes.push(Node::Leaf { value: [g / (h + 1e-16), 0.0] });
            nodes.len() - 1
        };
        let depth_ok = opts.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || n < opts.min_samples_split {
            return make_leaf(nodes, &idx);
        }

        // Variance-reduction scan over the allowed features.
        let mut best: Option<(f64, usize, f64)> = None;
        let total_sum: f64 = idx.iter().map(|&i| targets[i]).sum();
        let total_sq: f64 = idx.iter().map(|&i| targets[i] * targets[i]).sum();
        let parent_sse = total_sq - total_sum * total_sum / n as f64;
        for &feature in allowed {
            let values: Vec<f64> = idx.iter().map(|&i| x.get(i, feature)).collect();
            let scan = SplitScan::new(&values);
            let mut lsum = 0.0f64;
            let mut lsq = 0.0f64;
            for (rank, &local) in scan.order.iter().enumerate() {
                let t = targets[idx[local]];
                lsum += t;
                lsq += t * t;
                let next = rank + 1;
                if next == n {
                    break;
                }
                let v = values[local];
                let v_next = values[scan.order[next]];
                if v_next <= v {
                    continue;
                }
                let nl = next;
                let nr = n - next;
                if nl < opts.min_samples_leaf || nr < opts.min_samples_leaf {
                    continue;
                }
                let rsum = total_sum - lsum;
                let rsq = total_sq - lsq;
                let sse = (lsq - lsum * lsum / nl as f64) + (rsq - rsum * rsum / nr as f64);
                let gain = parent_sse - sse;
                let threshold = (v + v_next) / 2.0;
                let better = match &best {
                    None => gain > 1e-15,
                    Some((bg, bf, bt)) => {
                        gain > *bg + 1e-15
                            || ((gain - bg).abs() <= 1e-15
                                && (feature < *bf || (feature == *bf && threshold < *bt)))
                    }
                };
                if better {
                    best = Some((gain, feature, threshold));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            return make_leaf(nodes, &idx);
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| x.get(i, feature) <= threshold);
        let slot = nodes.len();
        nodes.push(Node::Leaf { value: [0.0, 0.0] });
        let left = Self::grow(x, targets, hessians, left_idx, allowed, depth + 1, opts, nodes);
        let right = Self::grow(x, targets, hessians, right_idx, allowed, depth + 1, opts, nodes);
        nodes[slot] = Node::Split { feature, threshold, left, right };
        slot
    }

    pub fn predict_one(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return value[0],
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}
