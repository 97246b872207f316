//! Evaluation: group-aware splitting, metrics, statistical comparisons,
//! rank aggregation, stacking, calibration, and inference timing.

mod calibration;
mod metrics;
mod ranking;
mod split;
mod stacking;
mod stats;
mod timing;

pub use calibration::{calibration_report, CalibrationBin, CalibrationReport};
pub use metrics::{confusion_and_rates, roc_auc, Confusion, MetricRow, RatesResult};
pub use ranking::{rank_summary, RankRow, RankTable, RANK_COLUMNS};
pub use split::{
    group_stratified_split, grouped_stratified_kfold, stratified_kfold, SplitPlan,
};
pub use stacking::{
    stack_ablation, stack_fit, AblationRow, CombineRule, OofMatrix, StackBase, StackedModel,
};
pub use stats::{benjamini_hochberg, bootstrap_auc_diff, mcnemar, StatTestResult};
pub use timing::{measure_inference_time, EnvDescriptor, TimingReport};
