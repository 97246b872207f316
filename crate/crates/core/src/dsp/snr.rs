//! Energy screening: drop segments whose band energy sits too close to
//! the dataset noise-floor estimate.

use crate::error::{Error, Result};
use crate::util::percentile_nearest_rank;
use serde::{Deserialize, Serialize};

/// Guard so silent segments get a finite dB value (-240 dB).
const RMS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrPolicy {
    /// Margin a segment must clear above the floor estimate, in dB.
    pub threshold_db: f64,
    /// Percentile of per-segment RMS used as the floor estimate.
    pub floor_percentile: f64,
}

impl Default for SnrPolicy {
    fn default() -> Self {
        SnrPolicy { threshold_db: 6.0, floor_percentile: 10.0 }
    }
}

impl SnrPolicy {
    fn validate(&self) -> Result<()> {
        if !(self.floor_percentile > 0.0 && self.floor_percentile < 100.0) {
            return Err(Error::Validation(format!(
                "floor percentile must lie in (0, 100), got {}",
                self.floor_percentile
            )));
        }
        Ok(())
    }
}

/// Screening outcome: index partition preserving input order.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrScreen {
    pub kept: Vec<usize>,
    pub discarded: Vec<usize>,
    pub floor_db: f64,
}

pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64).sqrt()
}

pub fn rms_db(samples: &[f64]) -> f64 {
    20.0 * rms(samples).max(RMS_FLOOR).log10()
}

/// Estimates the floor as the policy percentile of per-segment RMS (dB)
/// and keeps segment i iff `rms_db(i) - floor_db >= threshold_db`.
pub fn snr_screen<S: AsRef<[f64]>>(segments: &[S], policy: &SnrPolicy) -> Result<SnrScreen> {
    policy.validate()?;
    if segments.is_empty() {
        return Err(Error::Data("cannot screen an empty segment list".into()));
    }
    let levels: Vec<f64> = segments.iter().map(|s| rms_db(s.as_ref())).collect();
    let mut sorted = levels.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let floor_db = percentile_nearest_rank(&sorted, policy.floor_percentile);
    Ok(partition(&levels, floor_db, policy.threshold_db))
}

/// Re-screens with an already-fitted floor; screening the kept set again
/// with the same floor keeps all of it.
pub fn snr_screen_with_floor<S: AsRef<[f64]>>(
    segments: &[S],
    floor_db: f64,
    threshold_db: f64,
) -> SnrScreen {
    let levels: Vec<f64> = segments.iter().map(|s| rms_db(s.as_ref())).collect();
    partition(&levels, floor_db, threshold_db)
}

fn partition(levels: &[f64], floor_db: f64, threshold_db: f64) -> SnrScreen {
    let mut kept = Vec::new();
    let mut discarded = Vec::new();
    for (i, &db) in levels.iter().enumerate() {
        if db - floor_db >= threshold_db {
            kept.push(i);
        } else {
            discarded.push(i);
        }
    }
    SnrScreen { kept, discarded, floor_db }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(level: f64, n: usize) -> Vec<f64> {
        vec![level; n]
    }

    #[test]
    fn constant_rms_with_default_margin_discards_everything() {
        // All segments share one RMS, so the floor equals it and no
        // segment clears the 6 dB margin.
        let segs: Vec<Vec<f64>> = (0..10).map(|_| seg(0.1, 64)).collect();
        let r = snr_screen(&segs, &SnrPolicy::default()).unwrap();
        assert!(r.kept.is_empty());
        assert_eq!(r.discarded.len(), 10);
    }

    #[test]
    fn zero_threshold_keeps_boundary_segments() {
        let segs: Vec<Vec<f64>> = (0..10).map(|_| seg(0.1, 64)).collect();
        let r = snr_screen(&segs, &SnrPolicy { threshold_db: 0.0, floor_percentile: 10.0 }).unwrap();
        assert_eq!(r.kept.len(), 10);
    }

    #[test]
    fn loud_minority_survives_percentile_floor() {
        // 100 noise segments at -40 dB plus 10 buzz segments at -20 dB:
        // floor lands on -40 dB and exactly the buzz segments clear 6 dB.
        let mut segs: Vec<Vec<f64>> = (0..100).map(|_| seg(0.01, 64)).collect(); // -40 dB
        segs.extend((0..10).map(|_| seg(0.1, 64))); // -20 dB
        let r = snr_screen(&segs, &SnrPolicy::default()).unwrap();
        assert!((r.floor_db - (-40.0)).abs() < 1e-9);
        assert_eq!(r.kept, (100..110).collect::<Vec<_>>());
        assert_eq!(r.discarded.len(), 100);
    }

    #[test]
    fn rescreen_with_fitted_floor_is_idempotent() {
        let mut segs: Vec<Vec<f64>> = (0..50).map(|i| seg(0.01 + 0.002 * i as f64, 64)).collect();
        segs.extend((0..10).map(|_| seg(0.5, 64)));
        let policy = SnrPolicy::default();
        let first = snr_screen(&segs, &policy).unwrap();
        let kept_segs: Vec<Vec<f64>> = first.kept.iter().map(|&i| segs[i].clone()).collect();
        let second = snr_screen_with_floor(&kept_segs, first.floor_db, policy.threshold_db);
        assert_eq!(second.kept.len(), kept_segs.len());
        assert!(second.discarded.is_empty());
    }

    #[test]
    fn empty_input_is_an_error() {
        let segs: Vec<Vec<f64>> = Vec::new();
        assert!(snr_screen(&segs, &SnrPolicy::default()).is_err());
    }

    #[test]
    fn silence_gets_finite_db() {
        assert!(rms_db(&[0.0; 16]).is_finite());
    }
}
