//! Butterworth filters as cascades of second-order sections.
//!
//! High-pass filters discretize the analog Butterworth prototype section
//! by section (bilinear transform with frequency pre-warping, cookbook
//! coefficients). Wide band-passes are built as high-pass-at-low-corner
//! cascaded with low-pass-at-high-corner, which pins each corner at
//! -3.01 dB; with corners decades apart the cross-talk between the two
//! halves is far below the design tolerance.

use crate::error::{Error, Result};
use crate::ingest::AudioSegment;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterKind {
    Highpass,
    Lowpass,
    Bandpass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FilterDesign {
    Highpass { cutoff_hz: f64, order: usize },
    Bandpass { low_hz: f64, high_hz: f64, order: usize },
}

/// One second-order section, normalized so a0 = 1.
/// First-order sections set b2 = a2 = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiquadStage {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadStage {
    /// Poles strictly inside the unit circle (stability triangle).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    /// |H(e^{jw})| at normalized angular frequency w.
    fn magnitude(&self, w: f64) -> f64 {
        let (c1, s1) = (w.cos(), w.sin());
        let (c2, s2) = ((2.0 * w).cos(), (2.0 * w).sin());
        let nr = self.b0 + self.b1 * c1 + self.b2 * c2;
        let ni = -(self.b1 * s1 + self.b2 * s2);
        let dr = 1.0 + self.a1 * c1 + self.a2 * c2;
        let di = -(self.a1 * s1 + self.a2 * s2);
        ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiquadCascade {
    pub stages: Vec<BiquadStage>,
    pub design: FilterDesign,
    pub sample_rate: u32,
}

impl BiquadCascade {
    /// Causal single-pass filtering with zero initial state. Output
    /// length equals input length.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = input.to_vec();
        for st in &self.stages {
            // Direct form II transposed.
            let (mut z1, mut z2) = (0.0f64, 0.0f64);
            for v in out.iter_mut() {
                let x = *v;
                let y = st.b0 * x + z1;
                z1 = st.b1 * x - st.a1 * y + z2;
                z2 = st.b2 * x - st.a2 * y;
                *v = y;
            }
        }
        out
    }

    /// Filters a labeled segment, checking the rate contract.
    pub fn apply_segment(&self, segment: &AudioSegment) -> Result<Vec<f64>> {
        if segment.sample_rate != self.sample_rate {
            return Err(Error::Data(format!(
                "segment rate {} Hz does not match filter rate {} Hz",
                segment.sample_rate, self.sample_rate
            )));
        }
        Ok(self.apply(&segment.samples))
    }

    /// Cascade magnitude response at `freq_hz`.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate as f64;
        self.stages.iter().map(|s| s.magnitude(w)).product()
    }

    /// Cascade magnitude in dB.
    pub fn magnitude_db_at(&self, freq_hz: f64) -> f64 {
        20.0 * self.magnitude_at(freq_hz).max(1e-300).log10()
    }

    pub fn is_stable(&self) -> bool {
        self.stages.iter().all(|s| s.is_stable())
    }
}

const SUPPORTED_ORDERS: [usize; 3] = [2, 4, 8];

/// Designs a Butterworth high-pass or band-pass cascade.
///
/// `order` is the overall filter order and must be one of {2, 4, 8}; a
/// band-pass of order N rolls off like an order-N/2 high-pass below the
/// low corner and an order-N/2 low-pass above the high corner. Each
/// corner sits at -3.01 dB.
pub fn design_filter(design: FilterDesign, sample_rate: u32) -> Result<BiquadCascade> {
    let nyquist = sample_rate as f64 / 2.0;
    let order = match design {
        FilterDesign::Highpass { order, .. } | FilterDesign::Bandpass { order, .. } => order,
    };
    if order % 2 == 1 {
        return Err(Error::Validation(format!("filter order must be even, got {order}")));
    }
    if !SUPPORTED_ORDERS.contains(&order) {
        return Err(Error::Validation(format!(
            "filter order must be one of {SUPPORTED_ORDERS:?}, got {order}"
        )));
    }

    let check_corner = |f: f64, name: &str| -> Result<()> {
        if !(f > 0.0 && f < nyquist) {
            return Err(Error::Validation(format!(
                "{name} corner {f} Hz must lie in (0, {nyquist}) Hz"
            )));
        }
        Ok(())
    };

    let stages = match design {
        FilterDesign::Highpass { cutoff_hz, order } => {
            check_corner(cutoff_hz, "high-pass")?;
            butterworth_sections(FilterKind::Highpass, cutoff_hz, order, sample_rate)
        }
        FilterDesign::Bandpass { low_hz, high_hz, order } => {
            check_corner(low_hz, "band-pass low")?;
            check_corner(high_hz, "band-pass high")?;
            if low_hz >= high_hz {
                return Err(Error::Validation(format!(
                    "band-pass corners must satisfy low < high, got {low_hz} >= {high_hz}"
                )));
            }
            let mut st = butterworth_sections(FilterKind::Highpass, low_hz, order / 2, sample_rate);
            st.extend(butterworth_sections(FilterKind::Lowpass, high_hz, order / 2, sample_rate));
            st
        }
    };

    let cascade = BiquadCascade { stages, design, sample_rate };
    debug_assert!(cascade.is_stable());
    Ok(cascade)
}

/// Sections of an order-`n` Butterworth filter at `cutoff_hz`.
fn butterworth_sections(
    kind: FilterKind,
    cutoff_hz: f64,
    n: usize,
    sample_rate: u32,
) -> Vec<BiquadStage> {
    assert!(n >= 1);
    let w0 = 2.0 * PI * cutoff_hz / sample_rate as f64;
    let mut stages = Vec::new();
    if n % 2 == 1 {
        stages.push(first_order(kind, w0));
    }
    let pairs = n / 2;
    for k in 0..pairs {
        // Butterworth pole-pair quality factors.
        let q = 1.0 / (2.0 * ((2 * k + 1) as f64 * PI / (2.0 * n as f64)).sin());
        stages.push(second_order(kind, w0, q));
    }
    stages
}

fn second_order(kind: FilterKind, w0: f64, q: f64) -> BiquadStage {
    let (cw, sw) = (w0.cos(), w0.sin());
    let alpha = sw / (2.0 * q);
    let a0 = 1.0 + alpha;
    let (b0, b1, b2) = match kind {
        FilterKind::Highpass => {
            let t = (1.0 + cw) / 2.0;
            (t, -(1.0 + cw), t)
        }
        FilterKind::Lowpass => {
            let t = (1.0 - cw) / 2.0;
            (t, 1.0 - cw, t)
        }
        FilterKind::Bandpass => (alpha, 0.0, -alpha),
    };
    BiquadStage {
        b0: b0 / a0,
        b1: b1 / a0,
        b2: b2 / a0,
        a1: -2.0 * cw / a0,
        a2: (1.0 - alpha) / a0,
    }
}

// Bilinear transform of the first-order analog prototype.
fn first_order(kind: FilterKind, w0: f64) -> BiquadStage {
    let k = (w0 / 2.0).tan();
    let a0 = k + 1.0;
    match kind {
        FilterKind::Highpass => BiquadStage {
            b0: 1.0 / a0,
            b1: -1.0 / a0,
            b2: 0.0,
            a1: (k - 1.0) / a0,
            a2: 0.0,
        },
        FilterKind::Lowpass => BiquadStage {
            b0: k / a0,
            b1: k / a0,
            b2: 0.0,
            a1: (k - 1.0) / a0,
            a2: 0.0,
        },
        FilterKind::Bandpass => unreachable!("band-pass is built from HP+LP halves"),
    }
}
