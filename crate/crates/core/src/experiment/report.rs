use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::write_atomic;
use crate::error::{Error, Result};

use super::metrics::{smooth_curve, EpochMetrics, MaskStats, MetricsReport};
use super::svg::{line_chart, Series};
use super::sweep::{Comparison, SweepTable};

pub const METRICS_HEADER: &str = "epoch,train_loss,test_accuracy";

/// C-style `%.9g`.
pub fn fmt_g9(v: f64) -> String {
    const P: i32 = 9;
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= P {
        let m = strip_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        strip_zeros(&format!("{:.*}", (P - 1 - exp) as usize, v)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `MetricsReport` without the per-epoch series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub epochs: usize,
    pub max_test_accuracy: f64,
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

impl Summary {
    pub fn of(r: &MetricsReport) -> Self {
        Self {
            epochs: r.per_epoch.len(),
            max_test_accuracy: r.max_test_accuracy,
            max_test_accuracy_epoch: r.max_test_accuracy_epoch,
            median_window: r.median_window,
            median_test_accuracy_window: r.median_test_accuracy_window,
            smooth_width: r.smooth_width,
            smoothing: r.smoothing.clone(),
            mask: r.mask.clone(),
            parameter_count: r.parameter_count,
            config_hash: r.config_hash.clone(),
            runtime_seconds: r.runtime_seconds,
        }
    }

    pub fn into_report(self, per_epoch: Vec<EpochMetrics>) -> MetricsReport {
        MetricsReport {
            per_epoch,
            max_test_accuracy: self.max_test_accuracy,
            max_test_accuracy_epoch: self.max_test_accuracy_epoch,
            median_window: self.median_window,
            median_test_accuracy_window: self.median_test_accuracy_window,
            smooth_width: self.smooth_width,
            smoothing: self.smoothing,
            mask: self.mask,
            parameter_count: self.parameter_count,
            config_hash: self.config_hash,
            runtime_seconds: self.runtime_seconds,
        }
    }
}

pub fn metrics_csv(per_epoch: &[EpochMetrics]) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for e in per_epoch {
        let _ = writeln!(s, "{},{},{}", e.epoch, fmt_g9(e.train_loss), fmt_g9(e.test_accuracy));
    }
    s
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<EpochMetrics>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, column: None, msg: e.to_string() })?;
    if headers.iter().collect::<Vec<_>>().join(",") != METRICS_HEADER {
        return Err(Error::Parse { line: 1, column: None, msg: format!("expected header {METRICS_HEADER}") });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line()), column: None, msg: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        let cell = |j: usize| -> Result<&str> {
            rec.get(j).ok_or_else(|| Error::Parse { line, column: Some(j + 1), msg: "missing cell".into() })
        };
        let bad = |j: usize| Error::Parse { line, column: Some(j + 1), msg: "not a number".into() };
        out.push(EpochMetrics {
            epoch: cell(0)?.parse().map_err(|_| bad(0))?,
            train_loss: cell(1)?.parse().map_err(|_| bad(1))?,
            test_accuracy: cell(2)?.parse().map_err(|_| bad(2))?,
        });
    }
    Ok(out)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn accuracy_chart(title: &str, curves: &[(&str, &[f64], usize)]) -> String {
    let series: Vec<Series> = curves
        .iter()
        .map(|(name, ys, offset)| {
            Series::new(*name, ys.iter().enumerate().map(|(i, &y)| ((i + offset) as f64, y)).collect())
        })
        .collect();
    line_chart(title, "epoch", "test accuracy", &series, Some((0.0, 1.0)))
}

/// Writes `metrics.csv`, `summary.json` and `accuracy.svg`. Returns the
/// paths written.
pub fn emit_report(report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let acc = report.accuracies();
    let w = report.smooth_width;
    let smoothed = if acc.len() >= w && w > 0 { smooth_curve(&acc, w)? } else { Vec::new() };
    let raw_name = "test accuracy";
    let smooth_name = format!("smoothed (w={w})");
    let svg = accuracy_chart("Test accuracy per epoch", &[(raw_name, &acc, 1), (&smooth_name, &smoothed, w)]);
    let files = [
        ("metrics.csv", metrics_csv(&report.per_epoch)),
        ("summary.json", to_json(&Summary::of(report))),
        ("accuracy.svg", svg),
    ];
    write_all(dir, &files)
}

fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    files
        .iter()
        .map(|(name, body)| {
            let p = dir.join(name);
            write_atomic(&p, body.as_bytes())?;
            Ok(p)
        })
        .collect()
}

/// Reads back what [`emit_report`] wrote.
pub fn load_report(dir: &Path) -> Result<MetricsReport> {
    let read = |name: &str| -> Result<String> {
        let p = dir.join(name);
        fs::read_to_string(&p).map_err(|e| Error::io(&p, e))
    };
    let per_epoch = parse_metrics_csv(&read("metrics.csv")?)?;
    let summary: Summary = serde_json::from_str(&read("summary.json")?)
        .map_err(|e| Error::Parse { line: e.line() as u64, column: Some(e.column()), msg: e.to_string() })?;
    if summary.epochs != per_epoch.len() {
        return Err(Error::Parse {
            line: 0,
            column: None,
            msg: format!("summary lists {} epochs, metrics.csv has {}", summary.epochs, per_epoch.len()),
        });
    }
    Ok(summary.into_report(per_epoch))
}

fn opt_g9(v: Option<f64>) -> String {
    v.map(fmt_g9).unwrap_or_default()
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let mut s = String::from("threshold_t,max_test_accuracy,median_test_accuracy_window,frozen_fraction,error\n");
    for r in &table.rows {
        let err = r.error.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_g9(r.threshold_t),
            opt_g9(r.max_test_accuracy),
            opt_g9(r.median_test_accuracy_window),
            opt_g9(r.frozen_fraction),
            err
        );
    }
    s
}

/// Writes `sweep.csv`, `sweep.json` and `sweep.svg` (accuracy against t).
pub fn emit_sweep(table: &SweepTable, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let pts = |f: fn(&super::sweep::SweepRow) -> Option<f64>| -> Vec<(f64, f64)> {
        table.rows.iter().map(|r| (r.threshold_t, f(r).unwrap_or(f64::NAN))).collect()
    };
    let mut series = vec![Series::new("max test accuracy", pts(|r| r.max_test_accuracy))];
    if table.rows.iter().any(|r| r.median_test_accuracy_window.is_some()) {
        series.push(Series::new("median-window accuracy", pts(|r| r.median_test_accuracy_window)));
    }
    let svg = line_chart("Accuracy against threshold t", "threshold t", "test accuracy", &series, Some((0.0, 1.0)));
    write_all(dir, &[("sweep.csv", sweep_csv(table)), ("sweep.json", to_json(table)), ("sweep.svg", svg)])
}

/// Writes `comparison.json`, `comparison.csv` (smoothed curves) and
/// `comparison.svg`, plus full reports under `baseline/` and `frozen/`.
pub fn emit_comparison(cmp: &Comparison, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let w = cmp.smooth_width;
    let mut csv = String::from("epoch,smoothed_baseline,smoothed_frozen\n");
    for (i, (b, f)) in cmp.smoothed_baseline.iter().zip(&cmp.smoothed_frozen).enumerate() {
        let _ = writeln!(csv, "{},{},{}", i + w, fmt_g9(*b), fmt_g9(*f));
    }
    #[derive(Serialize)]
    struct Head<'a> {
        threshold_t: f64,
        smooth_width: usize,
        median_baseline: Option<f64>,
        median_frozen: Option<f64>,
        median_difference: Option<f64>,
        max_baseline: f64,
        max_frozen: f64,
        baseline_config_hash: &'a str,
        frozen_config_hash: &'a str,
    }
    let head = Head {
        threshold_t: cmp.threshold_t,
        smooth_width: w,
        median_baseline: cmp.median_baseline,
        median_frozen: cmp.median_frozen,
        median_difference: cmp.median_difference,
        max_baseline: cmp.baseline.max_test_accuracy,
        max_frozen: cmp.frozen.max_test_accuracy,
        baseline_config_hash: &cmp.baseline.config_hash,
        frozen_config_hash: &cmp.frozen.config_hash,
    };
    let frozen_name = format!("Weight-Freezing t={}", fmt_g9(cmp.threshold_t));
    let svg = accuracy_chart(
        &format!("Smoothed test accuracy (w={w})"),
        &[("baseline", &cmp.smoothed_baseline, w), (&frozen_name, &cmp.smoothed_frozen, w)],
    );
    let mut out = write_all(dir, &[("comparison.json", to_json(&head)), ("comparison.csv", csv), ("comparison.svg", svg)])?;
    out.extend(emit_report(&cmp.baseline, &dir.join("baseline"))?);
    out.extend(emit_report(&cmp.frozen, &dir.join("frozen"))?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.25, "0.25"),
            (1.0 / 3.0, "0.333333333"),
            (2.0 / 3.0, "0.666666667"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (-1.5e-7, "-1.5e-07"),
            (1e100, "1e+100"),
            (99999999.95, "100000000"),
            (999999999.5, "1e+09"),
        ];
        for (v, want) in cases {
            assert_eq!(fmt_g9(v), want, "{v}");
        }
    }

    fn report(epochs: usize) -> MetricsReport {
        let per: Vec<EpochMetrics> = (1..=epochs)
            .map(|e| EpochMetrics { epoch: e, train_loss: 1.0 / e as f64, test_accuracy: (e % 7) as f64 / 7.0 })
            .collect();
        MetricsReport::summarize(per, Some([5, epochs]), 4, None, 10, "abc".into(), 1.25).unwrap()
    }

    #[test]
    fn emit_is_reproducible_and_well_formed() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(30);
        emit_report(&r, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(csv.lines().count(), 31);
        assert!(csv.starts_with("epoch,train_loss,test_accuracy\n1,1,0.142857143\n"));
        let svg = fs::read_to_string(dir.path().join("accuracy.svg")).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("polyline")).count(), 2);

        let again = tempfile::tempdir().unwrap();
        emit_report(&r, again.path()).unwrap();
        for f in ["metrics.csv", "summary.json", "accuracy.svg"] {
            assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(again.path().join(f)).unwrap());
        }
        // re-emitting what was read back is byte-identical too
        let back = load_report(dir.path()).unwrap();
        let third = tempfile::tempdir().unwrap();
        emit_report(&back, third.path()).unwrap();
        for f in ["metrics.csv", "summary.json"] {
            assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(third.path().join(f)).unwrap());
        }
    }

    #[test]
    fn unwritable_target() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        assert!(matches!(emit_report(&report(10), &blocker.join("sub")), Err(Error::Io { .. })));
    }
}
