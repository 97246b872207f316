//! Dataset plumbing shared by the commands: synthetic dataset emission,
//! manifest ingest, the preprocessing chain, and feature extraction.

use crate::artifacts::OutDir;
use crate::config::{RunConfig, Task};
use crate::logging::RunLog;
use carapace_core::dsp::{design_filter, snr_screen, FilterDesign, SnrPolicy};
use carapace_core::error::{Error, Result};
use carapace_core::features::{mean_pool, mfcc, FeatureMatrix, MfccConfig};
use carapace_core::ingest::{
    decode_wav, encode_wav_pcm16, generate_synthetic_dataset, segment_clip, Age, AudioClip,
    AudioSegment, DatasetManifest, Sex,
};
use carapace_core::matrix::Mat;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::PathBuf;

pub const MANIFEST_REL: &str = "audio/manifest.csv";

/// Writes the synthetic dataset as per-individual WAV files plus a
/// manifest. Idempotent: rewrites the same bytes for the same config.
pub fn ensure_synthetic_dataset(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<()> {
    let spec = cfg.synth_spec()?;
    let n_per_class = cfg.dataset.synthetic.seconds_per_individual
        * cfg.dataset.synthetic.individuals_per_stratum;
    let segments = generate_synthetic_dataset(&spec, n_per_class, cfg.dataset.synthetic.seed)?;

    // Group segments per individual, preserving generation order.
    let mut per_individual: BTreeMap<String, (Sex, Age, Vec<&AudioSegment>)> = BTreeMap::new();
    for s in &segments {
        per_individual
            .entry(s.individual_id.clone())
            .or_insert((s.sex, s.age, Vec::new()))
            .2
            .push(s);
    }

    let mut manifest_rows = String::from("path,individual_id,sex,age\n");
    for (id, (sex, age, segs)) in &per_individual {
        let mut samples = Vec::with_capacity(segs.len() * cfg.dataset.sample_rate as usize);
        for s in segs {
            samples.extend_from_slice(&s.samples);
        }
        let clip = AudioClip { samples, sample_rate: cfg.dataset.sample_rate };
        let rel = format!("audio/{id}.wav");
        out.write(&rel, &encode_wav_pcm16(&clip))?;
        manifest_rows.push_str(&format!(
            "{id}.wav,{id},{},{}\n",
            match sex {
                Sex::Male => "M",
                Sex::Female => "F",
            },
            age
        ));
    }
    out.write_string(MANIFEST_REL, &manifest_rows)?;
    log.event(
        "synth",
        &[
            ("individuals", per_individual.len().to_string()),
            ("segments", segments.len().to_string()),
            ("seed", cfg.dataset.synthetic.seed.to_string()),
        ],
    );
    Ok(())
}

/// Path of the active manifest (synthetic or user-provided).
pub fn manifest_path(cfg: &RunConfig, out: &OutDir) -> Result<PathBuf> {
    match cfg.dataset.source.as_str() {
        "manifest" => Ok(cfg
            .dataset
            .manifest
            .clone()
            .ok_or_else(|| Error::Validation("dataset.manifest missing".into()))?),
        _ => Ok(out.path(MANIFEST_REL)),
    }
}

/// Loads and segments every manifest entry. Relative audio paths resolve
/// against the manifest's directory.
pub fn load_segments(cfg: &RunConfig, out: &OutDir, log: &mut RunLog) -> Result<Vec<AudioSegment>> {
    let path = manifest_path(cfg, out)?;
    if cfg.dataset.source == "synthetic" && !path.exists() {
        ensure_synthetic_dataset(cfg, out, log)?;
    }
    let manifest = DatasetManifest::from_csv_path(&path, cfg.dataset.sample_rate)?;
    let base = path.parent().map(PathBuf::from).unwrap_or_default();

    let mut segments = Vec::new();
    for entry in &manifest.entries {
        let wav_path = if entry.path.is_absolute() { entry.path.clone() } else { base.join(&entry.path) };
        let bytes = std::fs::read(&wav_path)
            .map_err(|e| Error::Data(format!("{}: {e}", wav_path.display())))?;
        let clip = decode_wav(&bytes)?;
        segments.extend(segment_clip(
            &clip,
            &entry.individual_id,
            entry.sex,
            entry.age,
            manifest.sample_rate_expected,
        )?);
    }
    log.event(
        "ingest",
        &[("files", manifest.entries.len().to_string()), ("segments", segments.len().to_string())],
    );
    Ok(segments)
}

/// Individual → (sex, age) map for split planning.
pub fn strata_map(cfg: &RunConfig, out: &OutDir) -> Result<BTreeMap<String, (Sex, Age)>> {
    let path = manifest_path(cfg, out)?;
    let manifest = DatasetManifest::from_csv_path(&path, cfg.dataset.sample_rate)?;
    let mut map = BTreeMap::new();
    for e in &manifest.entries {
        map.insert(e.individual_id.clone(), (e.sex, e.age));
    }
    Ok(map)
}

/// High-pass + band-pass per segment, then dataset-level SNR screening.
/// Returns the kept segments with filtered samples.
pub fn preprocess(
    cfg: &RunConfig,
    segments: Vec<AudioSegment>,
    log: &mut RunLog,
) -> Result<Vec<AudioSegment>> {
    let p = &cfg.preprocessing;
    let highpass = design_filter(
        FilterDesign::Highpass { cutoff_hz: p.highpass_cutoff_hz, order: p.highpass_order },
        cfg.dataset.sample_rate,
    )?;
    let bandpass = design_filter(
        FilterDesign::Bandpass {
            low_hz: p.bandpass_low_hz,
            high_hz: p.bandpass_high_hz,
            order: p.bandpass_order,
        },
        cfg.dataset.sample_rate,
    )?;

    let mut filtered: Vec<AudioSegment> = segments
        .into_par_iter()
        .map(|mut s| {
            let hp = highpass.apply(&s.samples);
            s.samples = bandpass.apply(&hp);
            s
        })
        .collect();

    let policy =
        SnrPolicy { threshold_db: p.snr_threshold_db, floor_percentile: p.snr_floor_percentile };
    let waveforms: Vec<&[f64]> = filtered.iter().map(|s| s.samples.as_slice()).collect();
    let screen = snr_screen(&waveforms, &policy)?;
    log.event(
        "snr_screen",
        &[
            ("kept", screen.kept.len().to_string()),
            ("discarded", screen.discarded.len().to_string()),
            ("floor_db", format!("{:.3}", screen.floor_db)),
            ("threshold_db", format!("{}", policy.threshold_db)),
        ],
    );
    if screen.kept.is_empty() {
        return Err(Error::Data(
            "SNR screening discarded every segment; lower preprocessing.snr_threshold_db".into(),
        ));
    }
    let keep: std::collections::BTreeSet<usize> = screen.kept.iter().copied().collect();
    let mut idx = 0usize;
    filtered.retain(|_| {
        let k = keep.contains(&idx);
        idx += 1;
        k
    });
    Ok(filtered)
}

/// Mean-pooled MFCC features at the largest requested dimensionality;
/// smaller dims are leading slices of the same orthonormal DCT.
pub struct ExtractedFeatures {
    pub pooled_max: Mat,
    pub max_dim: usize,
    pub age_labels: Vec<String>,
    pub sex_labels: Vec<String>,
    pub groups: Vec<String>,
}

pub fn extract_features(cfg: &RunConfig, segments: &[AudioSegment]) -> Result<ExtractedFeatures> {
    let max_dim = *cfg.run.mfcc_dims.iter().max().unwrap();
    let mfcc_cfg = MfccConfig {
        n_mfcc: max_dim,
        n_fft: cfg.features.n_fft,
        hop: cfg.features.hop,
        n_mels: cfg.features.n_mels,
        fmin: cfg.features.fmin,
        fmax: cfg.features.fmax,
        sample_rate: cfg.dataset.sample_rate,
    };
    mfcc_cfg.validate()?;
    let rows: Vec<Vec<f64>> = segments
        .par_iter()
        .map(|s| {
            let seq = mfcc(&s.samples, &mfcc_cfg)?;
            mean_pool(&seq)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExtractedFeatures {
        pooled_max: Mat::from_rows(&rows),
        max_dim,
        age_labels: segments.iter().map(|s| s.age.to_string()).collect(),
        sex_labels: segments.iter().map(|s| s.sex.to_string()).collect(),
        groups: segments.iter().map(|s| s.individual_id.clone()).collect(),
    })
}

impl ExtractedFeatures {
    /// Feature matrix for one (task, dim) pair.
    pub fn task_matrix(&self, task: Task, dim: usize) -> Result<FeatureMatrix> {
        if dim > self.max_dim {
            return Err(Error::Validation(format!(
                "requested {dim} MFCCs but only {} were extracted",
                self.max_dim
            )));
        }
        let cols: Vec<usize> = (0..dim).collect();
        let labels = match task {
            Task::Age => self.age_labels.clone(),
            Task::Sex => self.sex_labels.clone(),
        };
        FeatureMatrix::new(self.pooled_max.select_cols(&cols), labels, self.groups.clone())
    }
}

pub fn features_rel(task: Task, dim: usize) -> String {
    format!("features/{}_{dim}.csv", task.name())
}

pub fn features_bin_rel(task: Task, dim: usize) -> String {
    format!("features/{}_{dim}.bin", task.name())
}

/// Loads a feature matrix written by the features command.
pub fn load_features(out: &OutDir, task: Task, dim: usize) -> Result<FeatureMatrix> {
    let path = out.path(&features_rel(task, dim));
    let file = std::fs::File::open(&path)
        .map_err(|e| Error::Data(format!("{}: {e} (run `carapace features` first)", path.display())))?;
    FeatureMatrix::from_csv(file)
}
