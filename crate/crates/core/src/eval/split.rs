//! Group-level train/test splitting and stratified K-fold assignment.
//!
//! Splits always happen at the individual level so no animal's segments
//! straddle a boundary.

use crate::error::{Error, Result};
use crate::ingest::{Age, Sex};
use crate::util::seeded_rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_groups: BTreeSet<String>,
    pub test_groups: BTreeSet<String>,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitPlan {
    /// Row partition induced by group membership, input order preserved.
    pub fn apply(&self, groups: &[String]) -> Result<(Vec<usize>, Vec<usize>)> {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, g) in groups.iter().enumerate() {
            if self.test_groups.contains(g) {
                test.push(i);
            } else if self.train_groups.contains(g) {
                train.push(i);
            } else {
                return Err(Error::Data(format!("group '{g}' is not part of the split plan")));
            }
        }
        Ok((train, test))
    }

    pub fn assert_disjoint(&self) {
        assert!(
            self.train_groups.is_disjoint(&self.test_groups),
            "split hygiene violated: train and test share individuals"
        );
    }
}

/// Assigns individuals (never rows) to train/test, stratified by
/// (sex, age): each stratum sends `round(test_fraction * n)` individuals
/// to the test side, at least 1 and at most n-1.
pub fn group_stratified_split(
    strata: &BTreeMap<String, (Sex, Age)>,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitPlan> {
    if !(0.0 < test_fraction && test_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_stratum: BTreeMap<(Sex, Age), Vec<String>> = BTreeMap::new();
    for (id, &(sex, age)) in strata {
        by_stratum.entry((sex, age)).or_default().push(id.clone());
    }

    let mut rng = seeded_rng(seed, 0);
    let mut train_groups = BTreeSet::new();
    let mut test_groups = BTreeSet::new();
    for ((sex, age), mut ids) in by_stratum {
        if ids.len() < 2 {
            return Err(Error::Data(format!(
                "stratum {sex}/{age} has {} individual(s); need at least 2 to split",
                ids.len()
            )));
        }
        ids.sort();
        ids.shuffle(&mut rng);
        let n = ids.len();
        let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
        for (i, id) in ids.into_iter().enumerate() {
            if i < n_test {
                test_groups.insert(id);
            } else {
                train_groups.insert(id);
            }
        }
    }
    let plan = SplitPlan { train_groups, test_groups, test_fraction, seed };
    plan.assert_disjoint();
    Ok(plan)
}

/// Per-row fold assignment, class proportions balanced within ±1 sample.
pub fn stratified_kfold(y: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Validation(format!("fold count must be >= 2, got {k}")));
    }
    let minority = y.iter().filter(|&&v| v == 1).count().min(y.iter().filter(|&&v| v == 0).count());
    if k > minority {
        return Err(Error::Data(format!(
            "fold count {k} exceeds the minority class size {minority}"
        )));
    }
    let mut fold = vec![0usize; y.len()];
    let mut rng = seeded_rng(seed, 1);
    for class in [0usize, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for (pos, &i) in idx.iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    Ok(fold)
}

/// Fold assignment where all rows of one individual share a fold,
/// stratified by the individual's class. Every individual must carry a
/// single class label.
pub fn grouped_stratified_kfold(
    y: &[usize],
    groups: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Validation(format!("fold count must be >= 2, got {k}")));
    }
    if y.len() != groups.len() {
        return Err(Error::Dimension { expected: y.len(), got: groups.len() });
    }
    let mut class_of: BTreeMap<&str, usize> = BTreeMap::new();
    for (g, &cls) in groups.iter().zip(y) {
        match class_of.get(g.as_str()) {
            None => {
                class_of.insert(g, cls);
            }
            Some(&c) if c == cls => {}
            Some(_) => {
                return Err(Error::Data(format!(
                    "group '{g}' carries mixed class labels; grouped folds need one class per individual"
                )))
            }
        }
    }
    let per_class_groups = |cls: usize| -> Vec<&str> {
        class_of.iter().filter(|(_, &c)| c == cls).map(|(g, _)| *g).collect()
    };
    let minority = per_class_groups(0).len().min(per_class_groups(1).len());
    if k > minority {
        return Err(Error::Data(format!(
            "fold count {k} exceeds the minority class group count {minority}"
        )));
    }

    let mut fold_of_group: BTreeMap<&str, usize> = BTreeMap::new();
    let mut rng = seeded_rng(seed, 2);
    for class in [0usize, 1] {
        let mut ids = per_class_groups(class);
        ids.shuffle(&mut rng);
        for (pos, g) in ids.into_iter().enumerate() {
            fold_of_group.insert(g, pos % k);
        }
    }
    Ok(groups.iter().map(|g| fold_of_group[g.as_str()]).collect())
}
