//! Command implementations. Each command is idempotent with respect to
//! the output directory and writes every artifact atomically; missing
//! prerequisites are produced on demand so any command can run first.

use crate::artifacts::{content_id, run_id, OutDir};
use crate::config::{RunConfig, Task};
use crate::dataset::{
    self, extract_features, features_bin_rel, features_rel, load_features, load_segments,
    preprocess, strata_map,
};
use crate::logging::RunLog;
use crate::reports;
use carapace_core::dsp::Scaler;
use carapace_core::error::{Error, Result};
use carapace_core::eval::{
    benjamini_hochberg, bootstrap_auc_diff, calibration_report, confusion_and_rates,
    group_stratified_split, mcnemar, measure_inference_time, rank_summary, roc_auc, stack_ablation,
    stack_fit, AblationRow, EnvDescriptor, MetricRow, RankTable, SplitPlan, StackBase,
    StatTestResult, TimingReport,
};
use carapace_core::features::PcaModel;
use carapace_core::fixtures;
use carapace_core::learners::{
    fitted_from_envelope, grid_search, predict_from_proba, FittedPipeline, LearnerSpec,
    ModelEnvelope, NumericEncoding, PipelineSpec, PreprocessingIds,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

fn numeric_encoding(cfg: &RunConfig) -> NumericEncoding {
    if cfg.run.numeric_encoding == "base64" {
        NumericEncoding::Base64
    } else {
        NumericEncoding::Decimal
    }
}

/// Echoes config + run id into `run.json` for provenance.
fn write_provenance(cfg: &RunConfig, out: &OutDir, command: &str) -> Result<()> {
    #[derive(Serialize)]
    struct Provenance<'a> {
        run_id: String,
        tool_version: &'static str,
        command: &'a str,
        seed: u64,
        config: &'a RunConfig,
    }
    let p = Provenance {
        run_id: run_id(cfg),
        tool_version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.run.seed,
        config: cfg,
    };
    out.write_string("run.json", &serde_json::to_string_pretty(&p)?)?;
    Ok(())
}

pub struct SynthSummary {
    pub files: usize,
}

pub fn cmd_synth(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<SynthSummary> {
    if cfg.dataset.source != "synthetic" {
        return Err(Error::Validation(
            "synth requires dataset.source = 'synthetic'".into(),
        ));
    }
    dataset::ensure_synthetic_dataset(cfg, out, log)?;
    write_provenance(cfg, out, "synth")?;
    let manifest = out.read_string(dataset::MANIFEST_REL)?;
    Ok(SynthSummary { files: manifest.lines().count().saturating_sub(1) })
}

pub struct FeaturesSummary {
    pub segments_kept: usize,
    pub files: Vec<String>,
}

pub fn cmd_features(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<FeaturesSummary> {
    let segments = load_segments(cfg, out, log)?;
    let kept = preprocess(cfg, segments, log)?;
    let extracted = extract_features(cfg, &kept)?;

    let mut files = Vec::new();
    for task in &cfg.run.tasks {
        for &dim in &cfg.run.mfcc_dims {
            let fm = extracted.task_matrix(*task, dim)?;
            let mut csv = Vec::new();
            fm.to_csv(&mut csv)?;
            let rel = features_rel(*task, dim);
            out.write(&rel, &csv)?;
            files.push(rel);
            if cfg.run.write_binary_features {
                let mut bin = Vec::new();
                fm.to_binary(&mut bin)?;
                out.write(&features_bin_rel(*task, dim), &bin)?;
            }
            log.event(
                "features",
                &[
                    ("task", task.name().to_string()),
                    ("dim", dim.to_string()),
                    ("rows", fm.n_rows().to_string()),
                ],
            );
        }
    }
    write_provenance(cfg, out, "features")?;
    Ok(FeaturesSummary { segments_kept: kept.len(), files })
}

fn ensure_features(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<()> {
    let missing = cfg.run.tasks.iter().any(|t| {
        cfg.run.mfcc_dims.iter().any(|&d| !out.exists(&features_rel(*t, d)))
    });
    if missing {
        cmd_features(cfg, out, log)?;
    }
    Ok(())
}

/// Deterministic split plan shared by train/evaluate/stack/bench.
fn split_plan(cfg: &RunConfig, out: &OutDir) -> Result<SplitPlan> {
    let strata = strata_map(cfg, out)?;
    let plan = group_stratified_split(&strata, 0.2, cfg.run.seed)?;
    plan.assert_disjoint();
    Ok(plan)
}

fn model_rel(task: Task, dim: usize, model: &str) -> String {
    format!("models/{}_{dim}_{model}.json", task.name())
}

fn grid_rel(task: Task, dim: usize, model: &str) -> String {
    format!("grids/{}_{dim}_{model}.json", task.name())
}

/// Persists a fitted pipeline: scaler/PCA under content-addressed ids,
/// model as an envelope referencing them.
fn save_pipeline(
    cfg: &RunConfig,
    out: &OutDir,
    task: Task,
    dim: usize,
    model_id: &str,
    spec: &PipelineSpec,
    fitted: &FittedPipeline,
) -> Result<()> {
    let scaler_id = match &fitted.scaler {
        Some(s) => {
            let json = s.to_json();
            let id = content_id(json.as_bytes());
            out.write_string(&format!("scalers/{id}.json"), &json)?;
            Some(id)
        }
        None => None,
    };
    let pca_id = match &fitted.pca {
        Some(p) => {
            let json = p.to_json();
            let id = content_id(json.as_bytes());
            out.write_string(&format!("pca/{id}.json"), &json)?;
            Some(id)
        }
        None => None,
    };
    let envelope = ModelEnvelope::new(
        spec.learner.family(),
        spec.learner.hyperparams_json(),
        fitted.model.as_ref(),
        PreprocessingIds { scaler: scaler_id, pca: pca_id },
        fitted.seed,
    );
    out.write_string(&model_rel(task, dim, model_id), &envelope.to_json(numeric_encoding(cfg)))?;
    Ok(())
}

fn load_pipeline(out: &OutDir, task: Task, dim: usize, model_id: &str) -> Result<FittedPipeline> {
    let env = ModelEnvelope::from_json(&out.read_string(&model_rel(task, dim, model_id))?)?;
    let scaler = match &env.preprocessing.scaler {
        Some(id) => Some(Scaler::from_json(&out.read_string(&format!("scalers/{id}.json"))?)?),
        None => None,
    };
    let pca = match &env.preprocessing.pca {
        Some(id) => Some(PcaModel::from_json(&out.read_string(&format!("pca/{id}.json"))?)?),
        None => None,
    };
    let model = fitted_from_envelope(&env)?;
    Ok(FittedPipeline { scaler, pca, model, seed: env.seed })
}

fn learner_spec_of(out: &OutDir, task: Task, dim: usize, model_id: &str) -> Result<LearnerSpec> {
    let env = ModelEnvelope::from_json(&out.read_string(&model_rel(task, dim, model_id))?)?;
    Ok(serde_json::from_value(env.hyperparams)?)
}

pub struct TrainSummary {
    /// (task, dim, model, best description, best mean CV accuracy).
    pub trained: Vec<(Task, usize, String, String, f64)>,
}

pub fn cmd_train(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<TrainSummary> {
    ensure_features(cfg, out, log)?;
    let plan = split_plan(cfg, out)?;
    let model_ids = cfg.enabled_model_ids();
    let mut trained = Vec::new();

    for task in &cfg.run.tasks {
        let positive = cfg.positive_label(*task).to_string();
        for &dim in &cfg.run.mfcc_dims {
            let fm = load_features(out, *task, dim)?;
            let (train_rows, _) = plan.apply(&fm.groups)?;
            let train = fm.select_rows(&train_rows);
            let y = train.binary_labels(&positive);
            for model_id in &model_ids {
                let grid = cfg.grid_for(model_id, dim)?;
                let result = grid_search(
                    &grid,
                    &train.x,
                    &y,
                    Some(&train.groups),
                    cfg.run.folds,
                    cfg.run.seed,
                )?;
                for cell in &result.cells {
                    log.event(
                        "grid_cell",
                        &[
                            ("task", task.name().to_string()),
                            ("dim", dim.to_string()),
                            ("model", model_id.clone()),
                            ("cell", cell.index.to_string()),
                            ("desc", cell.description.clone()),
                            ("mean_acc", format!("{:.6}", cell.mean_accuracy)),
                            ("rank", cell.rank.to_string()),
                        ],
                    );
                }
                let best_spec = &grid[result.best_index];
                let fitted = best_spec.fit(&train.x, &y, cfg.run.seed)?;
                save_pipeline(cfg, out, *task, dim, model_id, best_spec, &fitted)?;
                out.write_string(&grid_rel(*task, dim, model_id), &serde_json::to_string_pretty(&result)?)?;
                let best = result.best_cell();
                log.event(
                    "trained",
                    &[
                        ("task", task.name().to_string()),
                        ("dim", dim.to_string()),
                        ("model", model_id.clone()),
                        ("best", best.description.clone()),
                        ("cv_acc", format!("{:.6}", best.mean_accuracy)),
                        ("grid_wall_s", format!("{:.3}", result.wall_seconds)),
                    ],
                );
                trained.push((
                    *task,
                    dim,
                    model_id.clone(),
                    best.description.clone(),
                    best.mean_accuracy,
                ));
            }
        }
    }
    write_provenance(cfg, out, "train")?;
    Ok(TrainSummary { trained })
}

fn ensure_trained(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<()> {
    let missing = cfg.run.tasks.iter().any(|t| {
        cfg.run.mfcc_dims.iter().any(|&d| {
            cfg.enabled_model_ids().iter().any(|m| !out.exists(&model_rel(*t, d, m)))
        })
    });
    if missing {
        cmd_train(cfg, out, log)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PairTest {
    model_a: String,
    model_b: String,
    #[serde(flatten)]
    result: StatTestResult,
}

#[derive(Serialize)]
struct StatReport {
    task: String,
    positive_class: String,
    mcnemar_pairs: Vec<PairTest>,
    bootstrap_auc_top2: Option<PairTest>,
}

pub struct EvaluateSummary {
    pub metrics: BTreeMap<String, Vec<MetricRow>>,
    pub rankings: BTreeMap<String, RankTable>,
}

pub fn cmd_evaluate(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<EvaluateSummary> {
    ensure_trained(cfg, out, log)?;
    let plan = split_plan(cfg, out)?;
    let model_ids = cfg.enabled_model_ids();
    let mut all_metrics = BTreeMap::new();
    let mut all_rankings = BTreeMap::new();

    for task in &cfg.run.tasks {
        let positive = cfg.positive_label(*task).to_string();
        let mut rows: Vec<MetricRow> = Vec::new();
        // Per-model best-dim predictions for the statistical tests,
        // keyed by (accuracy, f1, -it, -dim) so ties resolve like the
        // ranking selection below.
        type BestKey = (f64, f64, f64, f64);
        let mut best_pred: BTreeMap<String, (BestKey, Vec<usize>, Vec<f64>)> = BTreeMap::new();
        let mut y_test_ref: Option<Vec<usize>> = None;

        for &dim in &cfg.run.mfcc_dims {
            let fm = load_features(out, *task, dim)?;
            let (_, test_rows) = plan.apply(&fm.groups)?;
            let test = fm.select_rows(&test_rows);
            let y_test = test.binary_labels(&positive);
            if y_test_ref.is_none() {
                y_test_ref = Some(y_test.clone());
            }
            for model_id in &model_ids {
                let pipeline = load_pipeline(out, *task, dim, model_id)?;
                let proba = pipeline.predict_proba(&test.x)?;
                let scores: Vec<f64> = (0..proba.n_rows()).map(|r| proba.get(r, 1)).collect();
                let pred = predict_from_proba(&proba);
                let rates = confusion_and_rates(&y_test, &pred)?;
                let auc = roc_auc(&y_test, &scores)?;
                let it_ms = if cfg.run.measure_inference {
                    let x = test.x.clone();
                    let report = measure_inference_time(
                        || {
                            let _ = pipeline.predict_proba(&x);
                        },
                        test.x.n_rows(),
                        cfg.bench.warmup.max(1),
                        cfg.bench.repeats.max(5),
                    )?;
                    report.per_sample_median_ms
                } else {
                    0.0
                };
                rows.push(MetricRow {
                    model: model_id.clone(),
                    mfcc: dim,
                    accuracy: rates.accuracy,
                    precision: rates.precision,
                    recall: rates.recall,
                    f1: rates.f1,
                    auc_roc: auc,
                    it_ms,
                    confusion: Some(rates.confusion),
                });
                log.event(
                    "evaluated",
                    &[
                        ("task", task.name().to_string()),
                        ("dim", dim.to_string()),
                        ("model", model_id.clone()),
                        ("accuracy", format!("{:.4}", rates.accuracy)),
                        ("auc", format!("{auc:.4}")),
                    ],
                );
                // Track the best dim per model: accuracy, then F1, then
                // lower latency, then lower dim.
                let key = (rates.accuracy, rates.f1, -it_ms, -(dim as f64));
                let better = best_pred.get(model_id).is_none_or(|(best, _, _)| key > *best);
                if better {
                    best_pred.insert(model_id.clone(), (key, pred, scores));
                }
            }
        }

        // Reports.
        let task_name = task.name().to_string();
        out.write_string(&format!("reports/metrics_{task_name}.csv"), &reports::metrics_csv(&rows))?;
        out.write_string(
            &format!("reports/metrics_{task_name}.txt"),
            &reports::metrics_text(
                &format!("Test metrics, task = {task_name} (positive = {positive})"),
                &rows,
            ),
        )?;
        let confusions: Vec<&MetricRow> = rows.iter().collect();
        out.write_string(
            &format!("reports/confusion_{task_name}.json"),
            &serde_json::to_string_pretty(&confusions)?,
        )?;

        // Ranking over the best row per model.
        let mut best_rows: Vec<MetricRow> = Vec::new();
        for model_id in &model_ids {
            let best = rows
                .iter()
                .filter(|r| r.model == *model_id)
                .max_by(|a, b| {
                    (a.accuracy, a.f1, -a.it_ms, -(a.mfcc as f64))
                        .partial_cmp(&(b.accuracy, b.f1, -b.it_ms, -(b.mfcc as f64)))
                        .unwrap()
                })
                .expect("every model has rows");
            best_rows.push(best.clone());
        }
        let ranking = rank_summary(&best_rows)?;
        out.write_string(&format!("reports/ranking_{task_name}.csv"), &reports::ranking_csv(&ranking))?;
        out.write_string(
            &format!("reports/ranking_{task_name}.txt"),
            &reports::ranking_text(&format!("Ranking summary, task = {task_name}"), &ranking),
        )?;

        // Statistical comparisons on the shared test set.
        let y_test = y_test_ref.expect("at least one dim evaluated");
        let mut pairs: Vec<PairTest> = Vec::new();
        for i in 0..model_ids.len() {
            for j in (i + 1)..model_ids.len() {
                let (_, pred_a, _) = &best_pred[&model_ids[i]];
                let (_, pred_b, _) = &best_pred[&model_ids[j]];
                let r = mcnemar(pred_a, pred_b, &y_test)?;
                pairs.push(PairTest {
                    model_a: model_ids[i].clone(),
                    model_b: model_ids[j].clone(),
                    result: r,
                });
            }
        }
        let raw_p: Vec<f64> = pairs.iter().map(|p| p.result.p_value).collect();
        for (pair, adj) in pairs.iter_mut().zip(benjamini_hochberg(&raw_p)) {
            pair.result.adjusted_p = Some(adj);
        }
        let mut by_acc: Vec<&String> = model_ids.iter().collect();
        by_acc.sort_by(|a, b| {
            best_pred[b.as_str()].0.partial_cmp(&best_pred[a.as_str()].0).unwrap()
        });
        // (sorted by the same tie-broken key, best first)
        let bootstrap = if by_acc.len() >= 2 {
            let (a, b) = (by_acc[0], by_acc[1]);
            let r = bootstrap_auc_diff(
                &best_pred[a.as_str()].2,
                &best_pred[b.as_str()].2,
                &y_test,
                2000,
                cfg.run.seed,
            )?;
            Some(PairTest { model_a: a.clone(), model_b: b.clone(), result: r })
        } else {
            None
        };
        let report = StatReport {
            task: task_name.clone(),
            positive_class: positive.clone(),
            mcnemar_pairs: pairs,
            bootstrap_auc_top2: bootstrap,
        };
        out.write_string(
            &format!("reports/stat_tests_{task_name}.json"),
            &serde_json::to_string_pretty(&report)?,
        )?;

        all_metrics.insert(task_name.clone(), rows);
        all_rankings.insert(task_name, ranking);
    }
    write_provenance(cfg, out, "evaluate")?;
    Ok(EvaluateSummary { metrics: all_metrics, rankings: all_rankings })
}

#[derive(Serialize)]
struct StackReport {
    task: String,
    mfcc_dim: usize,
    bases: Vec<String>,
    meta_l2_strength: f64,
    oof_rows: usize,
    oof_cols: usize,
    ablation: Vec<AblationRow>,
    brier_stacked: f64,
}

pub struct StackSummary {
    pub ablation: BTreeMap<String, Vec<AblationRow>>,
}

pub fn cmd_stack(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<StackSummary> {
    ensure_trained(cfg, out, log)?;
    let plan = split_plan(cfg, out)?;
    let dim = cfg.stack.mfcc_dim;
    let mut summary = BTreeMap::new();

    for task in &cfg.run.tasks {
        let positive = cfg.positive_label(*task).to_string();
        let fm = load_features(out, *task, dim)?;
        let (train_rows, test_rows) = plan.apply(&fm.groups)?;
        let train = fm.select_rows(&train_rows);
        let test = fm.select_rows(&test_rows);
        let y_train = train.binary_labels(&positive);
        let y_test = test.binary_labels(&positive);

        // Bases reuse the tuned hyperparameters from the train stage.
        let mut bases = Vec::new();
        for model_id in &cfg.stack.bases {
            let spec = learner_spec_of(out, *task, dim, model_id)?;
            let pca = pca_of(cfg, model_id, dim)?;
            bases.push(StackBase {
                name: model_id.clone(),
                standardize: true,
                pca_components: pca,
                learner: spec.to_learner(),
            });
        }
        let stacked = stack_fit(
            &bases,
            &train.x,
            &y_train,
            Some(&train.groups),
            cfg.stack.folds,
            cfg.run.seed,
        )?;
        let ablation = stack_ablation(&stacked, &test.x, &y_test)?;
        for row in &ablation {
            log.event(
                "stack_ablation",
                &[
                    ("task", task.name().to_string()),
                    ("rule", format!("{:?}", row.rule)),
                    ("accuracy", format!("{:.4}", row.accuracy)),
                ],
            );
        }
        let proba = stacked.predict_proba(&test.x)?;
        let p1: Vec<f64> = (0..proba.n_rows()).map(|r| proba.get(r, 1)).collect();
        let calibration = calibration_report(&p1, &y_test, cfg.stack.calibration_bins)?;

        let task_name = task.name().to_string();
        let report = StackReport {
            task: task_name.clone(),
            mfcc_dim: dim,
            bases: cfg.stack.bases.clone(),
            meta_l2_strength: stacked.meta_params.l2_strength,
            oof_rows: stacked.oof.rows.n_rows(),
            oof_cols: stacked.oof.rows.n_cols(),
            ablation: ablation.clone(),
            brier_stacked: calibration.brier,
        };
        out.write_string(
            &format!("stack/stack_{task_name}.json"),
            &serde_json::to_string_pretty(&report)?,
        )?;
        out.write_string(
            &format!("stack/calibration_{task_name}.json"),
            &serde_json::to_string_pretty(&calibration)?,
        )?;
        let mut ablation_csv = String::from("rule,accuracy,f1,auc_roc\n");
        for row in &ablation {
            ablation_csv.push_str(&format!(
                "{:?},{:.2},{:.2},{:.2}\n",
                row.rule, row.accuracy, row.f1, row.auc_roc
            ));
        }
        out.write_string(&format!("stack/ablation_{task_name}.csv"), &ablation_csv)?;
        summary.insert(task_name, ablation);
    }
    write_provenance(cfg, out, "stack")?;
    Ok(StackSummary { ablation: summary })
}

fn pca_of(cfg: &RunConfig, model_id: &str, dim: usize) -> Result<Option<usize>> {
    // Mirrors the per-family PCA settings used at train time.
    Ok(cfg
        .grid_for(model_id, dim)?
        .first()
        .map(|p| p.pca_components)
        .unwrap_or(None))
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub model: String,
    pub mfcc: usize,
    pub report: TimingReport,
}

pub struct BenchSummary {
    pub rows: Vec<BenchRow>,
}

pub fn cmd_bench(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<BenchSummary> {
    ensure_features(cfg, out, log)?;
    let plan = split_plan(cfg, out)?;
    let dim = cfg.bench.mfcc_dim;
    let task = cfg.run.tasks.first().copied().unwrap_or(Task::Age);
    let positive = cfg.positive_label(task).to_string();
    let fm = load_features(out, task, dim)?;
    let (train_rows, test_rows) = plan.apply(&fm.groups)?;
    let train = fm.select_rows(&train_rows);
    let test = fm.select_rows(&test_rows);
    let y_train = train.binary_labels(&positive);

    let mut rows = Vec::new();
    for model_id in &cfg.bench.models {
        // Benchmark the first grid candidate (the family default).
        let spec = cfg
            .grid_for(model_id, dim)?
            .into_iter()
            .next()
            .ok_or_else(|| Error::Validation(format!("empty grid for '{model_id}'")))?;
        let fitted = spec.fit(&train.x, &y_train, cfg.run.seed)?;
        let x = test.x.clone();
        let report = measure_inference_time(
            || {
                let _ = fitted.predict_proba(&x);
            },
            test.x.n_rows(),
            cfg.bench.warmup,
            cfg.bench.repeats,
        )?;
        log.event(
            "bench",
            &[
                ("model", model_id.clone()),
                ("dim", dim.to_string()),
                ("median_ms", format!("{:.6}", report.per_sample_median_ms)),
                ("flagged", report.resolution_flagged.to_string()),
            ],
        );
        rows.push(BenchRow { model: model_id.clone(), mfcc: dim, report });
    }

    let mut csv = String::from("model,mfcc,median_ms,min_ms,iqr_ms,resolution_flagged\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{}\n",
            r.model,
            r.mfcc,
            r.report.per_sample_median_ms,
            r.report.per_sample_min_ms,
            r.report.per_sample_iqr_ms,
            r.report.resolution_flagged
        ));
    }
    out.write_string("bench/timing.csv", &csv)?;
    out.write_string("bench/env.json", &serde_json::to_string_pretty(&EnvDescriptor::probe())?)?;
    out.write_string("bench/timing.json", &serde_json::to_string_pretty(&rows)?)?;
    write_provenance(cfg, out, "bench")?;
    Ok(BenchSummary { rows })
}

pub struct ReproduceSummary {
    pub tables: Vec<(String, RankTable)>,
    pub mismatches: Vec<(String, fixtures::CellMismatch)>,
}

/// Recomputes the four published ranking tables from the shipped metric
/// fixtures (or a fixture directory override) and diffs every cell.
pub fn cmd_reproduce_ranks(
    fixtures_dir: Option<&Path>,
    out: Option<&OutDir>,
) -> Result<ReproduceSummary> {
    let mut tables = Vec::new();
    let mut mismatches = Vec::new();
    let pairs: Vec<(String, String, String)> = match fixtures_dir {
        None => fixtures::all_ranking_fixtures()
            .into_iter()
            .map(|(name, m, r)| (name.to_string(), m.to_string(), r.to_string()))
            .collect(),
        Some(dir) => {
            let mut v = Vec::new();
            for (name, metric_file, ranking_file) in [
                ("ranking_ml_adult_juvenile", "ml_adult_juvenile_metrics.csv", "ranking_ml_avj.csv"),
                ("ranking_ml_male_female", "ml_male_female_metrics.csv", "ranking_ml_mf.csv"),
                ("ranking_dl_adult_juvenile", "dl_adult_juvenile_metrics.csv", "ranking_dl_avj.csv"),
                ("ranking_dl_male_female", "dl_male_female_metrics.csv", "ranking_dl_mf.csv"),
            ] {
                let read = |f: &str| -> Result<String> {
                    std::fs::read_to_string(dir.join(f))
                        .map_err(|e| Error::Data(format!("{}: {e}", dir.join(f).display())))
                };
                v.push((name.to_string(), read(metric_file)?, read(ranking_file)?));
            }
            v
        }
    };

    for (name, metric_csv, ranking_csv) in &pairs {
        let (table, diff) = fixtures::reproduce_ranking(metric_csv, ranking_csv)?;
        if let Some(out) = out {
            out.write_string(&format!("reports/{name}.csv"), &reports::ranking_csv(&table))?;
            out.write_string(
                &format!("reports/{name}.txt"),
                &reports::ranking_text(name, &table),
            )?;
        }
        for m in diff {
            mismatches.push((name.clone(), m));
        }
        tables.push((name.clone(), table));
    }
    Ok(ReproduceSummary { tables, mismatches })
}
