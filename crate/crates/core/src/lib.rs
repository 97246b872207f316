//! Lobster bioacoustics classification toolchain.
//!
//! End-to-end pipeline for classifying European lobster carapace-vibration
//! recordings by age group (adult vs juvenile) and sex (male vs female):
//!
//! - **ingest** — WAV decoding, dataset manifests, 1 s segmentation, and a
//!   deterministic synthetic dataset generator for desk-scale runs
//! - **dsp** — Butterworth high-pass/band-pass cascades, SNR screening,
//!   z-score standardization
//! - **features** — MFCC extraction (STFT → mel filterbank → log → DCT),
//!   time-average pooling, PCA with explained-variance accounting
//! - **learners** — from-scratch KNN, Gaussian NB, SVM (SMO + Platt),
//!   random forest, gradient-boosted trees, MLP, logistic regression, and
//!   grid search
//! - **neural** — a minimal 1-D CNN/dilated-CNN engine with exact
//!   backpropagation, Adam and RMSprop
//! - **eval** — group-aware splits, the metric suite, statistical tests,
//!   rank aggregation, OOF stacking, calibration, and inference timing
//!
//! Everything is seeded and single-path deterministic: identical inputs
//! and seeds produce identical fitted models, predictions, and report
//! bytes regardless of thread count.

pub mod dsp;
pub mod error;
pub mod features;
pub mod fixtures;
pub mod ingest;
pub mod learners;
pub mod matrix;
pub mod neural;
pub mod util;

pub mod eval;

pub use error::{Error, Result};
pub use matrix::Mat;
