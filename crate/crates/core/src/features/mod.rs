//! MFCC feature extraction and PCA.

mod io;
mod mel;
mod mfcc;
mod pca;
mod stft;

pub use io::FeatureMatrix;
pub use mel::mel_filterbank;
pub use mfcc::{mean_pool, mfcc, MfccConfig, MfccSequence};
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use stft::{hann_window, stft_power};

/// HTK-style mel scale.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}
