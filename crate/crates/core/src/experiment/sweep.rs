use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::ClassifierMode;
use crate::preprocess::TrialSet;

use super::config::ExperimentConfig;
use super::metrics::{smooth_curve, MetricsReport};
use super::runner::{run_with_data, RunOptions};

/// Thresholds examined by default.
pub const DEFAULT_THRESHOLDS: [f64; 8] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold_t: f64,
    pub max_test_accuracy: Option<f64>,
    pub median_test_accuracy_window: Option<f64>,
    pub frozen_fraction: Option<f64>,
    /// Set when the run for this cell failed.
    pub error: Option<String>,
    #[serde(skip)]
    pub report: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub config_hash: String,
    pub seed: u64,
    pub mode: ClassifierMode,
    pub rows: Vec<SweepRow>,
}

/// Config for one cell: frozen mode unless the base already selects a
/// masked mode.
pub fn cell_config(base: &ExperimentConfig, t: f64) -> ExperimentConfig {
    let mut cfg = base.clone();
    if cfg.classifier.mode == ClassifierMode::None {
        cfg.classifier.mode = ClassifierMode::Frozen;
    }
    cfg.classifier.threshold_t = t;
    cfg
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))
}

/// One run per threshold on shared data. Cells are independent; a failing
/// cell is recorded and the rest continue. Rows come back in ascending `t`.
pub fn threshold_sweep(
    base: &ExperimentConfig,
    train: &TrialSet,
    test: &TrialSet,
    thresholds: &[f64],
    threads: usize,
) -> Result<SweepTable> {
    if let Some(t) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Config(format!("sweep threshold {t} outside [0, 1]")));
    }
    base.validate()?;
    let mut ts = thresholds.to_vec();
    ts.sort_by(f64::total_cmp);
    let run = |&t: &f64| -> SweepRow {
        match run_with_data(&cell_config(base, t), train, test, &RunOptions::default()) {
            Ok(out) => {
                let r = out.report.expect("full run");
                SweepRow {
                    threshold_t: t,
                    max_test_accuracy: Some(r.max_test_accuracy),
                    median_test_accuracy_window: r.median_test_accuracy_window,
                    frozen_fraction: r.mask.as_ref().map(|m| m.frozen_fraction),
                    error: None,
                    report: Some(r),
                }
            }
            Err(e) => {
                log::warn!("sweep cell t={t} failed: {e}");
                SweepRow {
                    threshold_t: t,
                    max_test_accuracy: None,
                    median_test_accuracy_window: None,
                    frozen_fraction: None,
                    error: Some(e.to_string()),
                    report: None,
                }
            }
        }
    };
    let rows = if threads <= 1 { ts.iter().map(run).collect() } else { pool(threads)?.install(|| ts.par_iter().map(run).collect()) };
    Ok(SweepTable { config_hash: base.hash(), seed: base.seed, mode: cell_config(base, 0.0).classifier.mode, rows })
}

/// Paired baseline / Weight-Freezing runs with smoothed curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub threshold_t: f64,
    pub smooth_width: usize,
    pub baseline: MetricsReport,
    pub frozen: MetricsReport,
    pub smoothed_baseline: Vec<f64>,
    pub smoothed_frozen: Vec<f64>,
    pub median_baseline: Option<f64>,
    pub median_frozen: Option<f64>,
    /// `median_frozen - median_baseline`.
    pub median_difference: Option<f64>,
}

pub fn compare_before_after(
    base: &ExperimentConfig,
    train: &TrialSet,
    test: &TrialSet,
    t: f64,
    threads: usize,
) -> Result<Comparison> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Config(format!("threshold {t} outside [0, 1]")));
    }
    let mut plain = base.clone();
    plain.classifier.mode = ClassifierMode::None;
    plain.classifier.threshold_t = 0.0;
    let masked = cell_config(base, t);
    let cfgs = [plain, masked];
    let run = |c: &ExperimentConfig| run_with_data(c, train, test, &RunOptions::default());
    let results: Vec<Result<_>> =
        if threads <= 1 { cfgs.iter().map(run).collect() } else { pool(threads)?.install(|| cfgs.par_iter().map(run).collect()) };
    let mut it = results.into_iter();
    let baseline = it.next().expect("two runs")?.report.expect("full run");
    let frozen = it.next().expect("two runs")?.report.expect("full run");
    let w = base.metrics.smooth_width;
    let median_baseline = baseline.median_test_accuracy_window;
    let median_frozen = frozen.median_test_accuracy_window;
    Ok(Comparison {
        threshold_t: t,
        smooth_width: w,
        smoothed_baseline: smooth_curve(&baseline.accuracies(), w)?,
        smoothed_frozen: smooth_curve(&frozen.accuracies(), w)?,
        median_difference: median_baseline.zip(median_frozen).map(|(b, f)| f - b),
        median_baseline,
        median_frozen,
        baseline,
        frozen,
    })
}
