//! Plain-text trial import: one trial per CSV row (channel-major flattening)
//! plus a label file with one class index per line.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::{default_class_names, Trial, TrialSet};
use crate::tensor::Matrix;

fn parse_data(text: &str, n_channels: usize) -> Result<Vec<Matrix>> {
    if n_channels == 0 {
        return Err(Error::domain("n_channels must be at least 1"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut width = None;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            column: None,
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse { line, column: None, msg: format!("ragged row: {} cells, expected {w}", record.len()) });
        }
        if w % n_channels != 0 {
            return Err(Error::Parse {
                line,
                column: None,
                msg: format!("{w} cells do not split into {n_channels} channels"),
            });
        }
        let vals = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    line,
                    column: Some(j + 1),
                    msg: format!("not a finite number: {cell:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Matrix::from_vec(n_channels, w / n_channels, vals)?);
    }
    Ok(out)
}

fn parse_labels(text: &str) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let cell = raw.trim();
        if cell.is_empty() {
            continue;
        }
        let label = cell.parse::<usize>().map_err(|_| Error::Parse {
            line: i as u64 + 1,
            column: Some(1),
            msg: format!("not a class index: {cell:?}"),
        })?;
        labels.push(label);
    }
    Ok(labels)
}

/// Reads a data CSV and a label file into a validated set. The class count
/// is one more than the largest label (at least 2).
pub fn import_csv_trials(data_path: &Path, labels_path: &Path, n_channels: usize, fs: f64) -> Result<TrialSet> {
    let data = fs::read_to_string(data_path).map_err(|e| Error::io(data_path, e))?;
    let labels = fs::read_to_string(labels_path).map_err(|e| Error::io(labels_path, e))?;
    trials_from_csv(&data, &labels, n_channels, fs)
}

pub fn trials_from_csv(data: &str, labels: &str, n_channels: usize, fs: f64) -> Result<TrialSet> {
    let rows = parse_data(data, n_channels)?;
    let labels = parse_labels(labels)?;
    if rows.len() != labels.len() {
        return Err(Error::Parse {
            line: rows.len().min(labels.len()) as u64 + 1,
            column: None,
            msg: format!("{} data rows but {} labels", rows.len(), labels.len()),
        });
    }
    let n_classes = labels.iter().max().map_or(2, |&m| (m + 1).max(2));
    let trials = rows.into_iter().zip(labels).map(|(m, l)| Trial::new(m, l)).collect();
    TrialSet::new(trials, fs, default_class_names(n_classes))
}

/// Inverse of [`import_csv_trials`]; values use shortest round-trip text.
pub fn export_csv_trials(set: &TrialSet, data_path: &Path, labels_path: &Path) -> Result<()> {
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for t in &set.trials {
        let cells: Vec<String> = t.data.as_slice().iter().map(|v| format!("{v:?}")).collect();
        writeln!(data, "{}", cells.join(",")).expect("vec write");
        writeln!(labels, "{}", t.label).expect("vec write");
    }
    super::write_atomic(data_path, &data)?;
    super::write_atomic(labels_path, &labels)
}
