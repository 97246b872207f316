//! Short-time power spectrum.

use super::mfcc::MfccConfig;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos())).collect()
}

/// Power spectrogram: T × (n_fft/2 + 1), Hann-windowed frames, power =
/// |DFT|² of the one-sided spectrum. No padding is applied, so
/// T = 1 + floor((len - n_fft) / hop); segments shorter than one frame
/// are rejected.
pub fn stft_power(segment: &[f64], config: &MfccConfig) -> Result<Mat> {
    config.validate()?;
    let n_fft = config.n_fft;
    if segment.len() < n_fft {
        return Err(Error::Data(format!(
            "segment of {} samples is shorter than one FFT frame ({})",
            segment.len(),
            n_fft
        )));
    }
    let hop = config.hop;
    let t = 1 + (segment.len() - n_fft) / hop;
    let n_bins = n_fft / 2 + 1;
    let window = hann_window(n_fft);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n_fft);

    let mut out = Mat::zeros(t, n_bins);
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n_fft];
    for frame in 0..t {
        let start = frame * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(segment[start + i] * window[i], 0.0);
        }
        fft.process(&mut buf);
        let row = out.row_mut(frame);
        for (k, v) in row.iter_mut().enumerate() {
            *v = buf[k].norm_sqr();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::MfccConfig;

    fn config() -> MfccConfig {
        MfccConfig { n_fft: 256, hop: 128, ..MfccConfig::default_for_rate(22_050) }
    }

    /// Naive O(n²) DFT used as the independent oracle.
    fn naive_dft_power(frame: &[f64]) -> Vec<f64> {
        let n = frame.len();
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0f64, 0.0f64);
                for (i, &v) in frame.iter().enumerate() {
                    let a = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                re * re + im * im
            })
            .collect()
    }

    #[test]
    fn zero_input_gives_zero_spectrogram() {
        let x = vec![0.0; 1024];
        let s = stft_power(&x, &config()).unwrap();
        assert!(s.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn frame_count_formula() {
        let cfg = config();
        let s = stft_power(&vec![0.1; 1000], &cfg).unwrap();
        assert_eq!(s.n_rows(), 1 + (1000 - 256) / 128);
        assert_eq!(s.n_cols(), 129);
        assert!(stft_power(&vec![0.1; 100], &cfg).is_err());
    }

    #[test]
    fn matches_naive_dft() {
        let cfg = config();
        let x: Vec<f64> = (0..600).map(|i| ((i * i) % 311) as f64 / 311.0 - 0.5).collect();
        let s = stft_power(&x, &cfg).unwrap();
        let w = hann_window(256);
        for frame in 0..s.n_rows() {
            let start = frame * cfg.hop;
            let windowed: Vec<f64> =
                (0..256).map(|i| x[start + i] * w[i]).collect();
            let want = naive_dft_power(&windowed);
            for (k, &p) in want.iter().enumerate() {
                assert!(
                    (s.get(frame, k) - p).abs() <= 1e-9 * p.abs().max(1.0),
                    "frame {frame} bin {k}: {} vs {p}",
                    s.get(frame, k)
                );
            }
        }
    }

    #[test]
    fn pure_bin_sine_concentrates_energy() {
        // Sine at exactly bin 16 of a 256-point frame: Hann leakage is
        // confined to the bin and its two neighbours.
        let cfg = config();
        let n = 256;
        let k0 = 16;
        let x: Vec<f64> =
            (0..n).map(|i| (2.0 * PI * k0 as f64 * i as f64 / n as f64).sin()).collect();
        let s = stft_power(&x, &cfg).unwrap();
        let total: f64 = s.row(0).iter().sum();
        let local: f64 = (k0 - 1..=k0 + 1).map(|k| s.get(0, k)).sum();
        assert!(local / total >= 0.99, "concentration {}", local / total);
    }

    #[test]
    fn parseval_energy_bookkeeping() {
        // Sum of |X_k|² over the full spectrum equals n times the
        // windowed-frame energy; reconstruct the full sum from the
        // one-sided output by doubling interior bins.
        let cfg = config();
        let x: Vec<f64> = (0..256).map(|i| ((i * 37) % 119) as f64 / 119.0 - 0.5).collect();
        let s = stft_power(&x, &cfg).unwrap();
        let n = 256;
        let mut spec_sum = s.get(0, 0) + s.get(0, n / 2);
        for k in 1..n / 2 {
            spec_sum += 2.0 * s.get(0, k);
        }
        let w = hann_window(n);
        let energy: f64 = x.iter().zip(&w).map(|(v, h)| (v * h) * (v * h)).sum();
        let want = n as f64 * energy;
        assert!(
            (spec_sum - want).abs() <= 1e-6 * want,
            "{spec_sum} vs {want}"
        );
    }
}
