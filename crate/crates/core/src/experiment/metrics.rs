use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::MaskMatrix;

/// Trailing moving average; output length `len - width + 1`.
pub fn smooth_curve(series: &[f64], width: usize) -> Result<Vec<f64>> {
    if width == 0 || series.len() < width {
        return Err(Error::domain(format!("cannot smooth {} points with width {width}", series.len())));
    }
    // offsets from the window's first value: exact for constant windows,
    // and each window is summed afresh so there is no running-sum drift
    Ok(series
        .windows(width)
        .map(|w| w[0] + w.iter().map(|x| x - w[0]).sum::<f64>() / width as f64)
        .collect())
}

/// Median over the inclusive 1-based epoch range `[lo, hi]`.
pub fn median_window(series: &[f64], lo: usize, hi: usize) -> Result<f64> {
    if !(1 <= lo && lo < hi && hi <= series.len()) {
        return Err(Error::domain(format!("median window [{lo}, {hi}] outside 1..={}", series.len())));
    }
    let mut v = series[lo - 1..hi].to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskStats {
    pub mode: crate::layers::MaskMode,
    pub threshold_t: f64,
    pub frozen_count: usize,
    pub size: usize,
    pub frozen_fraction: f64,
}

impl MaskStats {
    pub fn of(mask: &MaskMatrix) -> Self {
        Self {
            mode: mask.mode,
            threshold_t: mask.threshold,
            frozen_count: mask.frozen_count(),
            size: mask.keep.len(),
            frozen_fraction: mask.frozen_fraction(),
        }
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_epoch: Vec<EpochMetrics>,
    pub max_test_accuracy: f64,
    /// 1-based; the earliest epoch reaching the maximum.
    pub max_test_accuracy_epoch: usize,
    pub median_window: Option<[usize; 2]>,
    pub median_test_accuracy_window: Option<f64>,
    pub smooth_width: usize,
    pub smoothing: String,
    pub mask: Option<MaskStats>,
    pub parameter_count: usize,
    pub config_hash: String,
    pub runtime_seconds: f64,
}

impl MetricsReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.per_epoch.iter().map(|e| e.test_accuracy).collect()
    }

    /// Fills the derived statistics from `per_epoch`.
    pub fn summarize(
        per_epoch: Vec<EpochMetrics>,
        window: Option<[usize; 2]>,
        smooth_width: usize,
        mask: Option<MaskStats>,
        parameter_count: usize,
        config_hash: String,
        runtime_seconds: f64,
    ) -> Result<Self> {
        let acc: Vec<f64> = per_epoch.iter().map(|e| e.test_accuracy).collect();
        let (mut best, mut best_epoch) = (f64::NEG_INFINITY, 0);
        for (i, &a) in acc.iter().enumerate() {
            if a > best {
                best = a;
                best_epoch = i + 1;
            }
        }
        let median = window.map(|[lo, hi]| median_window(&acc, lo, hi)).transpose()?;
        Ok(Self {
            per_epoch,
            max_test_accuracy: best,
            max_test_accuracy_epoch: best_epoch,
            median_window: window,
            median_test_accuracy_window: median,
            smooth_width,
            smoothing: "trailing".into(),
            mask,
            parameter_count,
            config_hash,
            runtime_seconds,
        })
    }

    /// Report with wall-clock and config identity cleared, for comparisons
    /// between runs that should agree bit for bit.
    pub fn without_run_identity(&self) -> Self {
        Self { runtime_seconds: 0.0, config_hash: String::new(), ..self.clone() }
    }
}
