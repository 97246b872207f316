//! Declarative run configuration.
//!
//! One TOML file drives every command; unknown keys are rejected and the
//! full config is echoed into `run.json` for provenance. CLI flags
//! (`--seed`, `--out`, `--jobs`) override file values.

use carapace_core::error::{Error, Result};
use carapace_core::ingest::{Age, ClassProfile, Sex, SynthSpec, DEFAULT_SAMPLE_RATE};
use carapace_core::learners::{
    GammaParam, GbtParams, KnnParams, KnnWeight, LearnerSpec, MlpParams, NbParams, PipelineSpec,
    SvmParams,
};
use carapace_core::learners::{Activation, LogRegParams, RfParams};
use carapace_core::neural::{CnnSpec, DilationSchedule, OptimizerKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Age,
    Sex,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Age => "age",
            Task::Sex => "sex",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Which binary tasks to run; both by default.
    pub tasks: Vec<Task>,
    /// MFCC dimensionalities to extract and model.
    pub mfcc_dims: Vec<usize>,
    /// Master seed for splits, initialization, and subsampling.
    pub seed: u64,
    /// Cross-validation folds for grid search and stacking.
    pub folds: usize,
    /// Worker threads; 0 = all cores.
    pub jobs: usize,
    pub out_dir: PathBuf,
    /// Positive class of the age task.
    pub positive_age: String,
    /// Positive class of the sex task.
    pub positive_sex: String,
    /// Numeric array encoding in model files: "decimal" | "base64".
    pub numeric_encoding: String,
    /// Measure per-sample latency during evaluate (off keeps metric CSVs
    /// byte-reproducible; the bench command always measures).
    pub measure_inference: bool,
    /// Also write features in the binary container format.
    pub write_binary_features: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            tasks: vec![Task::Age, Task::Sex],
            mfcc_dims: vec![40, 50, 60],
            seed: 42,
            folds: 5,
            jobs: 0,
            out_dir: PathBuf::from("runs/default"),
            positive_age: "juvenile".into(),
            positive_sex: "female".into(),
            numeric_encoding: "decimal".into(),
            measure_inference: false,
            write_binary_features: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    pub individuals_per_stratum: usize,
    pub seconds_per_individual: usize,
    pub seed: u64,
    /// Per-stratum spectral profiles; keys adult_male, adult_female,
    /// juvenile_male, juvenile_female.
    pub profiles: BTreeMap<String, ClassProfile>,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        SyntheticSection {
            individuals_per_stratum: 6,
            seconds_per_individual: 12,
            seed: 42,
            profiles: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    /// "synthetic" or "manifest".
    pub source: String,
    /// CSV manifest path when source = "manifest".
    pub manifest: Option<PathBuf>,
    pub sample_rate: u32,
    pub synthetic: SyntheticSection,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            source: "synthetic".into(),
            manifest: None,
            sample_rate: DEFAULT_SAMPLE_RATE,
            synthetic: SyntheticSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessingSection {
    /// DC-removal high-pass corner, Hz (sensible range 20–50).
    pub highpass_cutoff_hz: f64,
    pub highpass_order: usize,
    pub bandpass_low_hz: f64,
    pub bandpass_high_hz: f64,
    pub bandpass_order: usize,
    /// Percentile of per-segment RMS used as the noise-floor estimate.
    pub snr_floor_percentile: f64,
    /// Margin above the floor a segment must clear; 0 keeps everything.
    pub snr_threshold_db: f64,
}

impl Default for PreprocessingSection {
    fn default() -> Self {
        PreprocessingSection {
            highpass_cutoff_hz: 35.0,
            highpass_order: 2,
            bandpass_low_hz: 50.0,
            bandpass_high_hz: 8000.0,
            bandpass_order: 4,
            snr_floor_percentile: 10.0,
            // The synthetic default dataset has no silent passages, so
            // the shipped config keeps every segment; raise for real
            // recordings with quiet stretches.
            snr_threshold_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureSection {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
}

impl Default for FeatureSection {
    fn default() -> Self {
        FeatureSection { n_fft: 2048, hop: 512, n_mels: 128, fmin: 50.0, fmax: 8000.0 }
    }
}

/// Per-model PCA setting: a component count, or "full" for an
/// identity-size rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PcaSetting {
    Components(usize),
    Mode(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnSection {
    pub enabled: bool,
    pub pca: Option<PcaSetting>,
    pub n_neighbors: Vec<usize>,
    pub p: Vec<f64>,
    pub weight: Vec<String>,
    pub algorithm: Vec<String>,
}

impl Default for KnnSection {
    fn default() -> Self {
        KnnSection {
            enabled: true,
            pca: Some(PcaSetting::Components(40)),
            n_neighbors: vec![5, 7, 9],
            p: vec![1.0, 2.0],
            weight: vec!["uniform".into()],
            algorithm: vec!["auto".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmSection {
    pub enabled: bool,
    pub pca: Option<PcaSetting>,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub gamma: Vec<String>,
    pub kernel: Vec<String>,
}

impl Default for SvmSection {
    fn default() -> Self {
        SvmSection {
            enabled: true,
            pca: Some(PcaSetting::Components(30)),
            c: vec![1.0, 10.0],
            gamma: vec!["auto".into(), "scale".into()],
            kernel: vec!["rbf".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfSection {
    pub enabled: bool,
    pub pca: Option<PcaSetting>,
    pub n_estimators: Vec<usize>,
    /// 0 means unrestricted depth.
    pub max_depth: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub min_samples_split: Vec<usize>,
}

impl Default for RfSection {
    fn default() -> Self {
        RfSection {
            enabled: true,
            pca: Some(PcaSetting::Components(30)),
            n_estimators: vec![200],
            max_depth: vec![0, 20],
            min_samples_leaf: vec![1, 3],
            min_samples_split: vec![2, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct XgboostSection {
    pub enabled: bool,
    pub pca: Option<PcaSetting>,
    pub n_estimators: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub subsample: Vec<f64>,
    pub colsample_bytree: Vec<f64>,
}

impl Default for XgboostSection {
    fn default() -> Self {
        XgboostSection {
            enabled: true,
            pca: Some(PcaSetting::Components(30)),
            n_estimators: vec![300],
            learning_rate: vec![0.1, 0.2],
            max_depth: vec![4, 5],
            subsample: vec![0.7, 0.8, 0.9],
            colsample_bytree: vec![0.7, 0.9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NbSection {
    pub enabled: bool,
    pub pca: Option<PcaSetting>,
    pub var_smoothing: Vec<f64>,
}

impl Default for NbSection {
    fn default() -> Self {
        NbSection {
            enabled: true,
            pca: Some(PcaSetting::Components(30)),
            var_smoothing: vec![1e-9],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpSection {
    pub enabled: bool,
    pub pca: Option<PcaSetting>,
    pub hidden: Vec<usize>,
    pub activation: Vec<String>,
    pub alpha: Vec<f64>,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
}

impl Default for MlpSection {
    fn default() -> Self {
        MlpSection {
            enabled: true,
            pca: Some(PcaSetting::Mode("full".into())),
            hidden: vec![64, 128],
            activation: vec!["relu".into(), "tanh".into()],
            alpha: vec![1e-4, 1e-3, 1e-2],
            learning_rate: 1e-3,
            max_epochs: 200,
            patience: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CnnSection {
    pub enabled: bool,
    pub pca: Option<PcaSetting>,
    /// Stack depths to train (1..=4 each).
    pub depths: Vec<usize>,
    pub optimizer: String,
    pub learning_rate: f64,
    /// Overrides applied on top of the per-depth defaults; 0 = keep.
    pub batch: usize,
    pub epochs: usize,
}

impl Default for CnnSection {
    fn default() -> Self {
        CnnSection {
            enabled: true,
            pca: Some(PcaSetting::Components(30)),
            depths: vec![1],
            optimizer: "adam".into(),
            learning_rate: 1e-3,
            batch: 0,
            epochs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DcnnSection {
    pub enabled: bool,
    pub pca: Option<PcaSetting>,
    pub depths: Vec<usize>,
    /// "exponential" (1,2,4,8) or "linear" (1,2,3,4).
    pub schedule: String,
    pub optimizer: String,
    pub learning_rate: f64,
    pub batch: usize,
    pub epochs: usize,
}

impl Default for DcnnSection {
    fn default() -> Self {
        DcnnSection {
            enabled: true,
            pca: Some(PcaSetting::Components(30)),
            depths: vec![1],
            schedule: "exponential".into(),
            optimizer: "adam".into(),
            learning_rate: 1e-3,
            batch: 0,
            epochs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelsSection {
    pub knn: KnnSection,
    pub svm: SvmSection,
    pub rf: RfSection,
    pub xgboost: XgboostSection,
    pub nb: NbSection,
    pub mlp: MlpSection,
    pub cnn: CnnSection,
    pub dcnn: DcnnSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StackSection {
    pub enabled: bool,
    /// Base model ids; their tuned hyperparameters come from the train
    /// stage artifacts.
    pub bases: Vec<String>,
    pub mfcc_dim: usize,
    pub folds: usize,
    pub calibration_bins: usize,
}

impl Default for StackSection {
    fn default() -> Self {
        StackSection {
            enabled: true,
            bases: vec!["rf".into(), "xgboost".into(), "svm".into(), "1d-cnn-1l".into()],
            mfcc_dim: 40,
            folds: 5,
            calibration_bins: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub models: Vec<String>,
    pub mfcc_dim: usize,
    pub warmup: usize,
    pub repeats: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            models: vec![
                "knn".into(),
                "nb".into(),
                "xgboost".into(),
                "mlp".into(),
                "svm".into(),
                "rf".into(),
                "1d-cnn-1l".into(),
                "1d-cnn-2l".into(),
                "1d-dcnn-1l".into(),
                "1d-dcnn-2l".into(),
            ],
            mfcc_dim: 40,
            warmup: 2,
            repeats: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub dataset: DatasetSection,
    pub preprocessing: PreprocessingSection,
    pub features: FeatureSection,
    pub models: ModelsSection,
    pub stack: StackSection,
    pub bench: BenchSection,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.tasks.is_empty() {
            return Err(Error::Validation("run.tasks must not be empty".into()));
        }
        if self.run.mfcc_dims.is_empty() {
            return Err(Error::Validation("run.mfcc_dims must not be empty".into()));
        }
        for &d in &self.run.mfcc_dims {
            if d == 0 || d > self.features.n_mels {
                return Err(Error::Validation(format!(
                    "mfcc dim {d} must lie in [1, n_mels = {}]",
                    self.features.n_mels
                )));
            }
        }
        if self.run.folds < 2 {
            return Err(Error::Validation("run.folds must be >= 2".into()));
        }
        match self.run.numeric_encoding.as_str() {
            "decimal" | "base64" => {}
            other => {
                return Err(Error::Validation(format!(
                    "run.numeric_encoding must be 'decimal' or 'base64', got '{other}'"
                )))
            }
        }
        match self.dataset.source.as_str() {
            "synthetic" => {}
            "manifest" => {
                if self.dataset.manifest.is_none() {
                    return Err(Error::Validation(
                        "dataset.manifest path is required when source = 'manifest'".into(),
                    ));
                }
            }
            other => {
                return Err(Error::Validation(format!(
                    "dataset.source must be 'synthetic' or 'manifest', got '{other}'"
                )))
            }
        }
        if !(20.0..=50.0).contains(&self.preprocessing.highpass_cutoff_hz) {
            return Err(Error::Validation(format!(
                "preprocessing.highpass_cutoff_hz must lie in [20, 50], got {}",
                self.preprocessing.highpass_cutoff_hz
            )));
        }
        for key in self.dataset.synthetic.profiles.keys() {
            stratum_from_key(key)?;
        }
        for depth in self.models.cnn.depths.iter().chain(&self.models.dcnn.depths) {
            if !(1..=4).contains(depth) {
                return Err(Error::Validation(format!(
                    "cnn/dcnn depths must lie in 1..=4, got {depth}"
                )));
            }
        }
        let known = self.all_model_ids();
        for id in self.stack.bases.iter().chain(&self.bench.models) {
            if !known.contains(id) {
                return Err(Error::Validation(format!(
                    "unknown model id '{id}' (known: {})",
                    known.join(", ")
                )));
            }
        }
        self.synth_spec()?;
        Ok(())
    }

    /// All model ids this config can produce, enabled or not.
    pub fn all_model_ids(&self) -> Vec<String> {
        let mut ids = vec![
            "knn".to_string(),
            "svm".to_string(),
            "rf".to_string(),
            "xgboost".to_string(),
            "nb".to_string(),
            "mlp".to_string(),
        ];
        for d in 1..=4 {
            ids.push(format!("1d-cnn-{d}l"));
            ids.push(format!("1d-dcnn-{d}l"));
        }
        ids
    }

    /// Enabled model ids in report order.
    pub fn enabled_model_ids(&self) -> Vec<String> {
        let m = &self.models;
        let mut ids = Vec::new();
        if m.rf.enabled {
            ids.push("rf".into());
        }
        if m.xgboost.enabled {
            ids.push("xgboost".into());
        }
        if m.mlp.enabled {
            ids.push("mlp".into());
        }
        if m.nb.enabled {
            ids.push("nb".into());
        }
        if m.svm.enabled {
            ids.push("svm".into());
        }
        if m.knn.enabled {
            ids.push("knn".into());
        }
        if m.cnn.enabled {
            for &d in &m.cnn.depths {
                ids.push(format!("1d-cnn-{d}l"));
            }
        }
        if m.dcnn.enabled {
            for &d in &m.dcnn.depths {
                ids.push(format!("1d-dcnn-{d}l"));
            }
        }
        ids
    }

    pub fn synth_spec(&self) -> Result<SynthSpec> {
        let mut spec = SynthSpec::default_desk();
        spec.sample_rate = self.dataset.sample_rate;
        spec.individuals_per_stratum = self.dataset.synthetic.individuals_per_stratum;
        for (key, profile) in &self.dataset.synthetic.profiles {
            spec.profiles.insert(stratum_from_key(key)?, *profile);
        }
        Ok(spec)
    }

    pub fn positive_label(&self, task: Task) -> &str {
        match task {
            Task::Age => &self.run.positive_age,
            Task::Sex => &self.run.positive_sex,
        }
    }

    fn resolve_pca(&self, setting: &Option<PcaSetting>, dim: usize) -> Result<Option<usize>> {
        match setting {
            None => Ok(None),
            Some(PcaSetting::Components(k)) => {
                if *k == 0 || *k > dim {
                    return Err(Error::Validation(format!(
                        "PCA component count {k} must lie in [1, {dim}]"
                    )));
                }
                Ok(Some(*k))
            }
            Some(PcaSetting::Mode(mode)) if mode == "full" => Ok(Some(dim)),
            Some(PcaSetting::Mode(other)) => {
                Err(Error::Validation(format!("PCA setting must be a count or 'full', got '{other}'")))
            }
        }
    }

    /// Grid of pipeline candidates for one model id at one MFCC dim.
    /// CNN variants return a single candidate (no grid).
    pub fn grid_for(&self, model_id: &str, dim: usize) -> Result<Vec<PipelineSpec>> {
        let m = &self.models;
        let mut out = Vec::new();
        match model_id {
            "knn" => {
                let pca = self.resolve_pca(&m.knn.pca, dim)?;
                for &k in &m.knn.n_neighbors {
                    for &p in &m.knn.p {
                        for w in &m.knn.weight {
                            for algo in &m.knn.algorithm {
                                let weight = match w.as_str() {
                                    "uniform" => KnnWeight::Uniform,
                                    "distance" => KnnWeight::Distance,
                                    other => {
                                        return Err(Error::Validation(format!(
                                            "knn.weight must be uniform|distance, got '{other}'"
                                        )))
                                    }
                                };
                                out.push(self.pipe(
                                    pca,
                                    LearnerSpec::Knn(KnnParams {
                                        n_neighbors: k,
                                        p,
                                        weight,
                                        algorithm: algo.clone(),
                                    }),
                                ));
                            }
                        }
                    }
                }
            }
            "svm" => {
                let pca = self.resolve_pca(&m.svm.pca, dim)?;
                for &c in &m.svm.c {
                    for g in &m.svm.gamma {
                        for kernel in &m.svm.kernel {
                            let gamma = match g.as_str() {
                                "auto" => GammaParam::Auto,
                                "scale" => GammaParam::Scale,
                                other => GammaParam::Value(other.parse::<f64>().map_err(|_| {
                                    Error::Validation(format!(
                                        "svm.gamma must be auto|scale|<number>, got '{other}'"
                                    ))
                                })?),
                            };
                            out.push(self.pipe(
                                pca,
                                LearnerSpec::Svm(SvmParams {
                                    c,
                                    gamma,
                                    kernel: kernel.clone(),
                                    ..SvmParams::default()
                                }),
                            ));
                        }
                    }
                }
            }
            "rf" => {
                let pca = self.resolve_pca(&m.rf.pca, dim)?;
                for &n in &m.rf.n_estimators {
                    for &depth in &m.rf.max_depth {
                        for &leaf in &m.rf.min_samples_leaf {
                            for &split in &m.rf.min_samples_split {
                                out.push(self.pipe(
                                    pca,
                                    LearnerSpec::Rf(RfParams {
                                        n_estimators: n,
                                        max_depth: (depth > 0).then_some(depth),
                                        min_samples_leaf: leaf,
                                        min_samples_split: split,
                                    }),
                                ));
                            }
                        }
                    }
                }
            }
            "xgboost" => {
                let pca = self.resolve_pca(&m.xgboost.pca, dim)?;
                for &n in &m.xgboost.n_estimators {
                    for &lr in &m.xgboost.learning_rate {
                        for &depth in &m.xgboost.max_depth {
                            for &sub in &m.xgboost.subsample {
                                for &col in &m.xgboost.colsample_bytree {
                                    out.push(self.pipe(
                                        pca,
                                        LearnerSpec::Gbt(GbtParams {
                                            n_estimators: n,
                                            learning_rate: lr,
                                            max_depth: depth,
                                            subsample: sub,
                                            colsample_bytree: col,
                                        }),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            "nb" => {
                let pca = self.resolve_pca(&m.nb.pca, dim)?;
                for &vs in &m.nb.var_smoothing {
                    out.push(self.pipe(pca, LearnerSpec::Nb(NbParams { var_smoothing: vs })));
                }
            }
            "mlp" => {
                let pca = self.resolve_pca(&m.mlp.pca, dim)?;
                for &h in &m.mlp.hidden {
                    for act in &m.mlp.activation {
                        for &alpha in &m.mlp.alpha {
                            let activation = match act.as_str() {
                                "relu" => Activation::Relu,
                                "tanh" => Activation::Tanh,
                                other => {
                                    return Err(Error::Validation(format!(
                                        "mlp.activation must be relu|tanh, got '{other}'"
                                    )))
                                }
                            };
                            out.push(self.pipe(
                                pca,
                                LearnerSpec::Mlp(MlpParams {
                                    hidden_units: h,
                                    activation,
                                    alpha,
                                    learning_rate: m.mlp.learning_rate,
                                    max_epochs: m.mlp.max_epochs,
                                    patience: m.mlp.patience,
                                    ..MlpParams::default()
                                }),
                            ));
                        }
                    }
                }
            }
            other => {
                let (depth, dilated) = parse_cnn_id(other)?;
                let section_pca = if dilated { &m.dcnn.pca } else { &m.cnn.pca };
                let pca = self.resolve_pca(section_pca, dim)?;
                out.push(self.pipe(pca, LearnerSpec::Cnn(self.cnn_spec(depth, dilated)?)));
            }
        }
        Ok(out)
    }

    fn pipe(&self, pca: Option<usize>, learner: LearnerSpec) -> PipelineSpec {
        PipelineSpec { standardize: true, pca_components: pca, learner }
    }

    pub fn cnn_spec(&self, depth: usize, dilated: bool) -> Result<CnnSpec> {
        let (section_opt, section_lr, batch, epochs) = if dilated {
            (&self.models.dcnn.optimizer, self.models.dcnn.learning_rate, self.models.dcnn.batch, self.models.dcnn.epochs)
        } else {
            (&self.models.cnn.optimizer, self.models.cnn.learning_rate, self.models.cnn.batch, self.models.cnn.epochs)
        };
        let mut spec = if dilated {
            let schedule = match self.models.dcnn.schedule.as_str() {
                "exponential" => DilationSchedule::Exponential,
                "linear" => DilationSchedule::Linear,
                other => {
                    return Err(Error::Validation(format!(
                        "dcnn.schedule must be exponential|linear, got '{other}'"
                    )))
                }
            };
            CnnSpec::dilated(depth, schedule)?
        } else {
            CnnSpec::plain(depth)?
        };
        spec.optimizer = match section_opt.as_str() {
            "adam" => OptimizerKind::Adam,
            "rmsprop" => OptimizerKind::Rmsprop,
            other => {
                return Err(Error::Validation(format!(
                    "optimizer must be adam|rmsprop, got '{other}'"
                )))
            }
        };
        spec.learning_rate = section_lr;
        if batch > 0 {
            spec.batch_size = batch;
        }
        if epochs > 0 {
            spec.epochs = epochs;
        }
        Ok(spec)
    }

    /// Meta-learner defaults for stacking.
    pub fn meta_learner(&self) -> LogRegParams {
        LogRegParams::default()
    }
}

pub fn parse_cnn_id(id: &str) -> Result<(usize, bool)> {
    let (dilated, rest) = if let Some(rest) = id.strip_prefix("1d-dcnn-") {
        (true, rest)
    } else if let Some(rest) = id.strip_prefix("1d-cnn-") {
        (false, rest)
    } else {
        return Err(Error::Validation(format!("unknown model id '{id}'")));
    };
    let depth: usize = rest
        .strip_suffix('l')
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::Validation(format!("malformed CNN id '{id}'")))?;
    if !(1..=4).contains(&depth) {
        return Err(Error::Validation(format!("CNN depth must lie in 1..=4, got {depth}")));
    }
    Ok((depth, dilated))
}

fn stratum_from_key(key: &str) -> Result<(Sex, Age)> {
    match key {
        "adult_male" => Ok((Sex::Male, Age::Adult)),
        "adult_female" => Ok((Sex::Female, Age::Adult)),
        "juvenile_male" => Ok((Sex::Male, Age::Juvenile)),
        "juvenile_female" => Ok((Sex::Female, Age::Juvenile)),
        other => Err(Error::Validation(format!(
            "profile key must be adult_male|adult_female|juvenile_male|juvenile_female, got '{other}'"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected_with_the_key_name() {
        let err = RunConfig::from_toml_str("[run]\nbogus_knob = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus_knob"), "{err}");
    }

    #[test]
    fn toml_roundtrip_preserves_defaults() {
        let cfg = RunConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let again = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn grids_cover_the_declared_cross_product() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.grid_for("knn", 40).unwrap().len(), 6);
        assert_eq!(cfg.grid_for("svm", 40).unwrap().len(), 4);
        assert_eq!(cfg.grid_for("rf", 40).unwrap().len(), 8);
        assert_eq!(cfg.grid_for("xgboost", 40).unwrap().len(), 24);
        assert_eq!(cfg.grid_for("nb", 40).unwrap().len(), 1);
        assert_eq!(cfg.grid_for("mlp", 40).unwrap().len(), 12);
        assert_eq!(cfg.grid_for("1d-cnn-1l", 40).unwrap().len(), 1);
        assert_eq!(cfg.grid_for("1d-dcnn-2l", 40).unwrap().len(), 1);
    }

    #[test]
    fn mlp_full_rotation_resolves_to_input_dim() {
        let cfg = RunConfig::default();
        let grid = cfg.grid_for("mlp", 40).unwrap();
        assert!(grid.iter().all(|p| p.pca_components == Some(40)));
    }

    #[test]
    fn cnn_ids_parse() {
        assert_eq!(parse_cnn_id("1d-cnn-1l").unwrap(), (1, false));
        assert_eq!(parse_cnn_id("1d-dcnn-4l").unwrap(), (4, true));
        assert!(parse_cnn_id("cnn").is_err());
        assert!(parse_cnn_id("1d-cnn-5l").is_err());
    }

    #[test]
    fn bad_model_reference_is_rejected() {
        let mut cfg = RunConfig::default();
        cfg.stack.bases = vec!["quantum".into()];
        assert!(cfg.validate().is_err());
    }
}
