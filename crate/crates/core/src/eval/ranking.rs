//! Rank aggregation across the six report metrics.
//!
//! Rates rank descending, inference time ascending. Tied entries share
//! the floored mean of the positions they occupy (for two-way ties this
//! equals the minimum position; a three-way tie at positions 5–7 ranks
//! 6), which is the convention the published ranking tables follow.
//! AvgRank is the mean of the six ranks.

use super::metrics::MetricRow;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const RANK_COLUMNS: [&str; 6] = ["acc", "prec", "rec", "f1", "auc", "it"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub model: String,
    pub mfcc: usize,
    /// acc, prec, rec, f1, auc, it.
    pub ranks: [usize; 6],
    pub avg_rank: f64,
}

impl RankRow {
    /// AvgRank rounded to 2 decimals, the published display precision.
    pub fn avg_rank_2dp(&self) -> f64 {
        (self.avg_rank * 100.0).round() / 100.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub rows: Vec<RankRow>,
}

/// Ranks within one column; `ascending` for cost-like columns.
fn column_ranks(values: &[f64], ascending: bool) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let cmp = values[a].partial_cmp(&values[b]).unwrap();
        if ascending {
            cmp
        } else {
            cmp.reverse()
        }
    });
    let mut ranks = vec![0usize; n];
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Floored mean of 1-based positions i+1 ..= j+1.
        let rank = (i + j + 2) / 2;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Builds the compact ranking summary from one selected row per model.
pub fn rank_summary(rows: &[MetricRow]) -> Result<RankTable> {
    if rows.is_empty() {
        return Err(Error::Data("rank summary needs at least one row".into()));
    }
    let mut seen = BTreeSet::new();
    for r in rows {
        if !seen.insert(r.model.as_str()) {
            return Err(Error::Data(format!("duplicate model id '{}' in rank input", r.model)));
        }
    }
    let col = |f: fn(&MetricRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let ranks_per_col = [
        column_ranks(&col(|r| r.accuracy), false),
        column_ranks(&col(|r| r.precision), false),
        column_ranks(&col(|r| r.recall), false),
        column_ranks(&col(|r| r.f1), false),
        column_ranks(&col(|r| r.auc_roc), false),
        column_ranks(&col(|r| r.it_ms), true),
    ];
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let ranks = [
            ranks_per_col[0][i],
            ranks_per_col[1][i],
            ranks_per_col[2][i],
            ranks_per_col[3][i],
            ranks_per_col[4][i],
            ranks_per_col[5][i],
        ];
        let avg_rank = ranks.iter().sum::<usize>() as f64 / 6.0;
        out.push(RankRow { model: r.model.clone(), mfcc: r.mfcc, ranks, avg_rank });
    }
    Ok(RankTable { rows: out })
}
