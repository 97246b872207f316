//! Triangular mel filterbank.

use super::{hz_to_mel, mel_to_hz};
use crate::error::{Error, Result};
use crate::matrix::Mat;

/// Builds an `n_mels × (n_fft/2 + 1)` filterbank of triangular filters
/// equally spaced on the mel scale between `fmin` and `fmax`, area
/// normalized (each triangle scaled by 2 / bandwidth).
pub fn mel_filterbank(
    n_mels: usize,
    fmin: f64,
    fmax: f64,
    n_fft: usize,
    sample_rate: u32,
) -> Result<Mat> {
    let nyquist = sample_rate as f64 / 2.0;
    if n_mels == 0 {
        return Err(Error::Validation("n_mels must be positive".into()));
    }
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(Error::Validation(format!(
            "mel band must satisfy 0 <= fmin < fmax <= Nyquist, got [{fmin}, {fmax}] at {nyquist}"
        )));
    }

    let n_bins = n_fft / 2 + 1;
    let bin_hz: Vec<f64> =
        (0..n_bins).map(|k| k as f64 * sample_rate as f64 / n_fft as f64).collect();

    let mel_lo = hz_to_mel(fmin);
    let mel_hi = hz_to_mel(fmax);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut fb = Mat::zeros(n_mels, n_bins);
    for m in 0..n_mels {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let norm = 2.0 / (hi - lo);
        let mut support = false;
        for (k, &f) in bin_hz.iter().enumerate() {
            let up = (f - lo) / (center - lo);
            let down = (hi - f) / (hi - center);
            let w = up.min(down).max(0.0);
            if w > 0.0 {
                fb.set(m, k, w * norm);
                support = true;
            }
        }
        if !support {
            return Err(Error::Validation(format!(
                "mel filter {m} has no FFT-bin support; reduce n_mels or increase n_fft"
            )));
        }
    }
    Ok(fb)
}
