//! Config-driven training runs, threshold sweeps, paired comparisons and
//! report files.

mod config;
mod metrics;
mod report;
mod runner;
mod svg;
mod sweep;

pub use config::{DataConfig, ExperimentConfig, MetricsConfig, ModelConfig, Preset, SubjectFiles};
pub use metrics::{median_window, smooth_curve, EpochMetrics, MaskStats, MetricsReport};
pub use report::{
    emit_comparison, emit_report, emit_sweep, fmt_g9, load_report, metrics_csv, parse_metrics_csv, sweep_csv, Summary,
    METRICS_HEADER,
};
pub use runner::{
    build_model, evaluate, load_data, prepare_data, run_experiment, run_with_data, CheckpointPolicy, RunOptions,
    RunOutcome,
};
pub use svg::{line_chart, Series};
pub use sweep::{cell_config, compare_before_after, threshold_sweep, Comparison, SweepRow, SweepTable, DEFAULT_THRESHOLDS};
