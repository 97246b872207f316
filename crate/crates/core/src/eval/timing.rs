//! Per-sample inference latency measurement.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvDescriptor {
    pub cpu_model: String,
    pub cores: usize,
    pub os: String,
}

impl EnvDescriptor {
    pub fn probe() -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|v| v.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        EnvDescriptor {
            cpu_model,
            cores: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            os: std::env::consts::OS.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub per_sample_median_ms: f64,
    pub per_sample_min_ms: f64,
    pub per_sample_iqr_ms: f64,
    pub repeats: usize,
    pub warmup: usize,
    pub batch_size: usize,
    /// Set when the measurement sits too close to the clock granularity
    /// to be trusted.
    pub resolution_flagged: bool,
    pub env: EnvDescriptor,
}

/// Times `predict_batch` (one full pass over `batch_size` samples) after
/// warm-up runs and reports per-sample order statistics over `repeats`.
pub fn measure_inference_time<F: FnMut()>(
    mut predict_batch: F,
    batch_size: usize,
    warmup: usize,
    repeats: usize,
) -> Result<TimingReport> {
    if repeats < 5 {
        return Err(Error::Validation(format!("repeats must be >= 5, got {repeats}")));
    }
    if warmup < 1 {
        return Err(Error::Validation(format!("warmup must be >= 1, got {warmup}")));
    }
    if batch_size == 0 {
        return Err(Error::Data("cannot time an empty batch".into()));
    }
    for _ in 0..warmup {
        predict_batch();
    }
    let mut per_sample_ms = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t0 = Instant::now();
        predict_batch();
        per_sample_ms.push(t0.elapsed().as_secs_f64() * 1e3 / batch_size as f64);
    }
    per_sample_ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = crate::util::quantile_linear(&per_sample_ms, 0.5);
    let q1 = crate::util::quantile_linear(&per_sample_ms, 0.25);
    let q3 = crate::util::quantile_linear(&per_sample_ms, 0.75);

    // Clock granularity estimate: smallest positive delta of back-to-back
    // timestamps.
    let mut resolution_ms = f64::INFINITY;
    for _ in 0..64 {
        let a = Instant::now();
        let mut b = Instant::now();
        while b == a {
            b = Instant::now();
        }
        resolution_ms = resolution_ms.min((b - a).as_secs_f64() * 1e3);
    }
    let batch_median_ms = median * batch_size as f64;
    let resolution_flagged = batch_median_ms < 100.0 * resolution_ms;

    Ok(TimingReport {
        per_sample_median_ms: median,
        per_sample_min_ms: per_sample_ms[0],
        per_sample_iqr_ms: q3 - q1,
        repeats,
        warmup,
        batch_size,
        resolution_flagged,
        env: EnvDescriptor::probe(),
    })
}
