//! Published metric tables shipped as versioned CSV fixtures, plus the
//! machinery that recomputes their ranking summaries cell by cell.
//!
//! The four metric tables are the point-estimate results the ranking
//! tables were derived from; reproducing the rankings is pure arithmetic
//! and runs without any network or dataset access.

use crate::error::{Error, Result};
use crate::eval::{rank_summary, MetricRow, RankTable};
use serde::{Deserialize, Serialize};

pub const ML_ADULT_JUVENILE_METRICS: &str =
    include_str!("../fixtures/ml_adult_juvenile_metrics.csv");
pub const DL_ADULT_JUVENILE_METRICS: &str =
    include_str!("../fixtures/dl_adult_juvenile_metrics.csv");
pub const ML_MALE_FEMALE_METRICS: &str = include_str!("../fixtures/ml_male_female_metrics.csv");
pub const DL_MALE_FEMALE_METRICS: &str = include_str!("../fixtures/dl_male_female_metrics.csv");
pub const RANKING_ML_AVJ: &str = include_str!("../fixtures/ranking_ml_avj.csv");
pub const RANKING_DL_AVJ: &str = include_str!("../fixtures/ranking_dl_avj.csv");
pub const RANKING_ML_MF: &str = include_str!("../fixtures/ranking_ml_mf.csv");
pub const RANKING_DL_MF: &str = include_str!("../fixtures/ranking_dl_mf.csv");

/// The four (metric table, expected ranking) pairs.
pub fn all_ranking_fixtures() -> [(&'static str, &'static str, &'static str); 4] {
    [
        ("ranking_ml_adult_juvenile", ML_ADULT_JUVENILE_METRICS, RANKING_ML_AVJ),
        ("ranking_ml_male_female", ML_MALE_FEMALE_METRICS, RANKING_ML_MF),
        ("ranking_dl_adult_juvenile", DL_ADULT_JUVENILE_METRICS, RANKING_DL_AVJ),
        ("ranking_dl_male_female", DL_MALE_FEMALE_METRICS, RANKING_DL_MF),
    ]
}

/// One expected ranking-table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpectedRankRow {
    pub model: String,
    pub mfcc: usize,
    pub ranks: [usize; 6],
    pub avg_rank: f64,
}

/// A cell whose recomputed value disagrees with the published table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMismatch {
    pub model: String,
    pub mfcc: usize,
    pub column: String,
    pub expected: String,
    pub got: String,
}

pub fn parse_metric_csv(text: &str) -> Result<Vec<MetricRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    {
        let headers = rdr.headers().map_err(|e| Error::Data(format!("metric CSV: {e}")))?;
        let want = ["model", "mfcc", "accuracy", "precision", "recall", "f1", "auc_roc", "it_ms"];
        let got: Vec<&str> = headers.iter().collect();
        if got != want {
            return Err(Error::Data(format!(
                "metric CSV header must be '{}', got '{}'",
                want.join(","),
                got.join(",")
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("metric CSV row {}: {e}", i + 2)))?;
        let field = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .map_err(|e| Error::Data(format!("metric CSV row {} col {j}: {e}", i + 2)))
        };
        rows.push(MetricRow {
            model: rec[0].to_string(),
            mfcc: rec[1]
                .parse()
                .map_err(|e| Error::Data(format!("metric CSV row {}: mfcc: {e}", i + 2)))?,
            accuracy: field(2)?,
            precision: field(3)?,
            recall: field(4)?,
            f1: field(5)?,
            auc_roc: field(6)?,
            it_ms: field(7)?,
            confusion: None,
        });
    }
    if rows.is_empty() {
        return Err(Error::Data("metric CSV holds no rows".into()));
    }
    Ok(rows)
}

pub fn parse_ranking_csv(text: &str) -> Result<Vec<ExpectedRankRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    {
        let headers = rdr.headers().map_err(|e| Error::Data(format!("ranking CSV: {e}")))?;
        let want = [
            "model", "mfcc", "acc_rank", "prec_rank", "rec_rank", "f1_rank", "auc_rank",
            "it_rank", "avg_rank",
        ];
        let got: Vec<&str> = headers.iter().collect();
        if got != want {
            return Err(Error::Data(format!(
                "ranking CSV header must be '{}', got '{}'",
                want.join(","),
                got.join(",")
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("ranking CSV row {}: {e}", i + 2)))?;
        let rank = |j: usize| -> Result<usize> {
            rec[j]
                .parse::<usize>()
                .map_err(|e| Error::Data(format!("ranking CSV row {} col {j}: {e}", i + 2)))
        };
        rows.push(ExpectedRankRow {
            model: rec[0].to_string(),
            mfcc: rec[1]
                .parse()
                .map_err(|e| Error::Data(format!("ranking CSV row {}: mfcc: {e}", i + 2)))?,
            ranks: [rank(2)?, rank(3)?, rank(4)?, rank(5)?, rank(6)?, rank(7)?],
            avg_rank: rec[8]
                .parse()
                .map_err(|e| Error::Data(format!("ranking CSV row {}: avg_rank: {e}", i + 2)))?,
        });
    }
    if rows.is_empty() {
        return Err(Error::Data("ranking CSV holds no rows".into()));
    }
    Ok(rows)
}

/// Recomputes one ranking table from its metric table and diffs it
/// against the published cells. The expected table also defines which
/// (model, mfcc) row represents each model. An empty mismatch list means
/// exact reproduction (ranks integral, AvgRank at 2 decimals).
pub fn reproduce_ranking(metric_csv: &str, expected_csv: &str) -> Result<(RankTable, Vec<CellMismatch>)> {
    let metrics = parse_metric_csv(metric_csv)?;
    let expected = parse_ranking_csv(expected_csv)?;

    let mut selected = Vec::with_capacity(expected.len());
    for e in &expected {
        let row = metrics
            .iter()
            .find(|m| m.model == e.model && m.mfcc == e.mfcc)
            .ok_or_else(|| {
                Error::Data(format!("metric table has no row for {} @ {} MFCC", e.model, e.mfcc))
            })?;
        selected.push(row.clone());
    }
    let table = rank_summary(&selected)?;

    let col_names = ["acc_rank", "prec_rank", "rec_rank", "f1_rank", "auc_rank", "it_rank"];
    let mut mismatches = Vec::new();
    for (e, got) in expected.iter().zip(&table.rows) {
        for (c, name) in col_names.iter().enumerate() {
            if got.ranks[c] != e.ranks[c] {
                mismatches.push(CellMismatch {
                    model: e.model.clone(),
                    mfcc: e.mfcc,
                    column: name.to_string(),
                    expected: e.ranks[c].to_string(),
                    got: got.ranks[c].to_string(),
                });
            }
        }
        let got_avg = got.avg_rank_2dp();
        if format!("{got_avg:.2}") != format!("{:.2}", e.avg_rank) {
            mismatches.push(CellMismatch {
                model: e.model.clone(),
                mfcc: e.mfcc,
                column: "avg_rank".into(),
                expected: format!("{:.2}", e.avg_rank),
                got: format!("{got_avg:.2}"),
            });
        }
    }
    Ok((table, mismatches))
}
