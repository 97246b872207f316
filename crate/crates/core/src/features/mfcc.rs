//! MFCC: STFT → mel filterbank → log → orthonormal DCT-II.

use super::{mel_filterbank, stft_power};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Floor added under mel energies before the log, guarding silence.
pub const LOG_GUARD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfccConfig {
    pub n_mfcc: usize,
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub sample_rate: u32,
}

impl MfccConfig {
    /// Defaults: n_fft 2048, hop 512, 128 mel bands, band limits matching
    /// the 50–8000 Hz band-pass corners, 40 coefficients.
    pub fn default_for_rate(sample_rate: u32) -> Self {
        MfccConfig {
            n_mfcc: 40,
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            fmin: 50.0,
            fmax: 8000.0,
            sample_rate,
        }
    }

    pub fn with_n_mfcc(mut self, n_mfcc: usize) -> Self {
        self.n_mfcc = n_mfcc;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_mfcc == 0 || self.n_mfcc > self.n_mels {
            return Err(Error::Validation(format!(
                "n_mfcc must lie in [1, n_mels = {}], got {}",
                self.n_mels, self.n_mfcc
            )));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::Validation(format!(
                "hop must lie in [1, n_fft = {}], got {}",
                self.n_fft, self.hop
            )));
        }
        if self.fmax > self.sample_rate as f64 / 2.0 {
            return Err(Error::Validation(format!(
                "fmax {} exceeds the Nyquist frequency",
                self.fmax
            )));
        }
        Ok(())
    }
}

/// Frame-wise MFCCs: T × n_mfcc.
#[derive(Debug, Clone, PartialEq)]
pub struct MfccSequence {
    pub frames: Mat,
    pub config: MfccConfig,
}

/// Orthonormal DCT-II basis: `n_out × n_in`.
fn dct_ortho_basis(n_out: usize, n_in: usize) -> Mat {
    let mut b = Mat::zeros(n_out, n_in);
    let n = n_in as f64;
    for k in 0..n_out {
        let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for i in 0..n_in {
            b.set(k, i, scale * (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n)).cos());
        }
    }
    b
}

/// Computes the MFCC sequence of one segment.
pub fn mfcc(segment: &[f64], config: &MfccConfig) -> Result<MfccSequence> {
    let power = stft_power(segment, config)?;
    let fb = mel_filterbank(config.n_mels, config.fmin, config.fmax, config.n_fft, config.sample_rate)?;
    let dct = dct_ortho_basis(config.n_mfcc, config.n_mels);

    let t = power.n_rows();
    let mut frames = Mat::zeros(t, config.n_mfcc);
    let mut log_mel = vec![0.0f64; config.n_mels];
    for f in 0..t {
        let spec = power.row(f);
        for (m, lm) in log_mel.iter_mut().enumerate() {
            let e: f64 = fb.row(m).iter().zip(spec).map(|(w, p)| w * p).sum();
            *lm = (e + LOG_GUARD).ln();
        }
        let row = frames.row_mut(f);
        for k in 0..config.n_mfcc {
            row[k] = dct.row(k).iter().zip(&log_mel).map(|(c, v)| c * v).sum();
        }
    }
    Ok(MfccSequence { frames, config: *config })
}

/// Arithmetic mean over frames, per coefficient.
pub fn mean_pool(seq: &MfccSequence) -> Result<Vec<f64>> {
    if seq.frames.n_rows() == 0 {
        return Err(Error::Data("cannot pool an empty MFCC sequence".into()));
    }
    Ok(seq.frames.column_means())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> MfccConfig {
        MfccConfig {
            n_mfcc: 13,
            n_fft: 256,
            hop: 128,
            n_mels: 26,
            fmin: 50.0,
            fmax: 8000.0,
            sample_rate: 22_050,
        }
    }

    #[test]
    fn silence_is_dct_of_constant_log_guard() {
        let cfg = small_config();
        let seq = mfcc(&vec![0.0; 1024], &cfg).unwrap();
        let c0_expected = (cfg.n_mels as f64).sqrt() * LOG_GUARD.ln();
        for f in 0..seq.frames.n_rows() {
            let row = seq.frames.row(f);
            assert!((row[0] - c0_expected).abs() < 1e-9, "c0 {} vs {c0_expected}", row[0]);
            for &c in &row[1..] {
                assert!(c.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn mean_pool_identities() {
        let cfg = small_config();
        let single = MfccSequence { frames: Mat::from_rows(&[vec![1.0, -2.0, 3.0]]), config: cfg };
        assert_eq!(mean_pool(&single).unwrap(), vec![1.0, -2.0, 3.0]);

        let sym = MfccSequence {
            frames: Mat::from_rows(&[vec![1.0, -2.0, 3.0], vec![-1.0, 2.0, -3.0]]),
            config: cfg,
        };
        assert_eq!(mean_pool(&sym).unwrap(), vec![0.0, 0.0, 0.0]);

        let hand = MfccSequence {
            frames: Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]),
            config: cfg,
        };
        assert_eq!(mean_pool(&hand).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn mean_pool_is_permutation_invariant() {
        let cfg = small_config();
        let a = MfccSequence {
            frames: Mat::from_rows(&[vec![1.0, 2.0], vec![9.0, -4.0], vec![0.5, 0.25]]),
            config: cfg,
        };
        let b = MfccSequence {
            frames: Mat::from_rows(&[vec![9.0, -4.0], vec![0.5, 0.25], vec![1.0, 2.0]]),
            config: cfg,
        };
        assert_eq!(mean_pool(&a).unwrap(), mean_pool(&b).unwrap());
    }

    /// Fully naive MFCC reference: direct DFT, explicit triangles,
    /// explicit DCT sums. Kept free of any implementation code.
    pub(crate) fn naive_mfcc(segment: &[f64], cfg: &MfccConfig) -> Vec<Vec<f64>> {
        let n = cfg.n_fft;
        let t = 1 + (segment.len() - n) / cfg.hop;
        let window: Vec<f64> =
            (0..n).map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos())).collect();
        let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
        let imel = |m: f64| 700.0 * (10f64.powf(m / 2595.0) - 1.0);
        let lo = mel(cfg.fmin);
        let hi = mel(cfg.fmax);
        let edges: Vec<f64> = (0..cfg.n_mels + 2)
            .map(|i| imel(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
            .collect();

        let mut out = Vec::with_capacity(t);
        for frame in 0..t {
            let s = frame * cfg.hop;
            let w: Vec<f64> = (0..n).map(|i| segment[s + i] * window[i]).collect();
            // Direct DFT power, one-sided.
            let power: Vec<f64> = (0..=n / 2)
                .map(|k| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (i, &v) in w.iter().enumerate() {
                        let a = -2.0 * PI * (k * i) as f64 / n as f64;
                        re += v * a.cos();
                        im += v * a.sin();
                    }
                    re * re + im * im
                })
                .collect();
            // Explicit triangles with area normalization.
            let mut logmel = vec![0.0f64; cfg.n_mels];
            for m in 0..cfg.n_mels {
                let (a, b, c) = (edges[m], edges[m + 1], edges[m + 2]);
                let mut e = 0.0;
                for (k, &p) in power.iter().enumerate() {
                    let f = k as f64 * cfg.sample_rate as f64 / n as f64;
                    let wgt = ((f - a) / (b - a)).min((c - f) / (c - b)).max(0.0);
                    e += wgt * (2.0 / (c - a)) * p;
                }
                logmel[m] = (e + LOG_GUARD).ln();
            }
            // Explicit orthonormal DCT-II sums.
            let nm = cfg.n_mels as f64;
            let coeffs: Vec<f64> = (0..cfg.n_mfcc)
                .map(|k| {
                    let scale = if k == 0 { (1.0 / nm).sqrt() } else { (2.0 / nm).sqrt() };
                    scale
                        * logmel
                            .iter()
                            .enumerate()
                            .map(|(i, &v)| v * (PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nm)).cos())
                            .sum::<f64>()
                })
                .collect();
            out.push(coeffs);
        }
        out
    }

    #[test]
    fn full_chain_matches_naive_reference() {
        let cfg = small_config();
        let x: Vec<f64> = (0..800)
            .map(|i| {
                (2.0 * PI * 150.0 * i as f64 / 22_050.0).sin() * 0.4
                    + ((i * 193) % 257) as f64 / 257.0 * 0.05
            })
            .collect();
        let got = mfcc(&x, &cfg).unwrap();
        let want = naive_mfcc(&x, &cfg);
        assert_eq!(got.frames.n_rows(), want.len());
        for (f, row) in want.iter().enumerate() {
            for (k, &w) in row.iter().enumerate() {
                assert!(
                    (got.frames.get(f, k) - w).abs() < 1e-6,
                    "frame {f} coeff {k}: {} vs {w}",
                    got.frames.get(f, k)
                );
            }
        }
    }

    #[test]
    fn buzz_and_noise_segments_are_distinguishable() {
        // Mean MFCC distance between classes dwarfs within-class spread
        // over 50 randomized draws per class.
        use crate::util::seeded_rng;
        use rand::Rng;
        let cfg = small_config();
        let fs = 22_050.0;
        let n = 1024;
        let draws = 50;
        let mut buzz = Vec::new();
        let mut noise = Vec::new();
        for d in 0..draws {
            let mut rng = seeded_rng(7, d as u64);
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            let b: Vec<f64> = (0..n)
                .map(|i| (2.0 * PI * 150.0 * i as f64 / fs + phase).sin() * 0.5)
                .collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
            buzz.push(mean_pool(&mfcc(&b, &cfg).unwrap()).unwrap());
            noise.push(mean_pool(&mfcc(&w, &cfg).unwrap()).unwrap());
        }
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        let mut between = 0.0;
        let mut within = 0.0;
        let mut nb = 0;
        let mut nw = 0;
        for i in 0..draws {
            for j in 0..draws {
                between += dist(&buzz[i], &noise[j]);
                nb += 1;
                if i < j {
                    within += dist(&buzz[i], &buzz[j]) + dist(&noise[i], &noise[j]);
                    nw += 2;
                }
            }
        }
        let between = between / nb as f64;
        let within = within / nw as f64;
        assert!(between > 5.0 * within, "between {between} within {within}");
    }
}
