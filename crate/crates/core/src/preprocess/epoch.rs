use crate::error::{Error, Result};
use crate::tensor::Matrix;

use super::trial::{Trial, TrialSet};

/// Cue position (in samples) and the class it announces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cue {
    pub sample: usize,
    pub label: usize,
}

/// Sample offsets `[start, end)` of a window in seconds, relative to a cue.
pub fn window_offsets(window: [f64; 2], fs: f64) -> Result<(i64, i64)> {
    let [t0, t1] = window;
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(Error::domain(format!("epoch window must satisfy t_start < t_end, got [{t0}, {t1}]")));
    }
    if !(fs > 0.0) {
        return Err(Error::domain(format!("sampling rate must be positive, got {fs}")));
    }
    // rounding absorbs representation error in products like 1.5 * 250
    let start = (t0 * fs).round() as i64;
    let end = (t1 * fs).round() as i64;
    if end <= start {
        return Err(Error::domain(format!("window [{t0}, {t1}] s is shorter than one sample")));
    }
    Ok((start, end))
}

/// Cuts one trial per cue from a continuous `channels x T` recording.
pub fn epoch(
    continuous: &Matrix,
    cues: &[Cue],
    window: [f64; 2],
    fs: f64,
    class_names: Vec<String>,
) -> Result<TrialSet> {
    let (start, end) = window_offsets(window, fs)?;
    let total = continuous.cols();
    let mut trials = Vec::with_capacity(cues.len());
    for (cue_index, cue) in cues.iter().enumerate() {
        let lo = cue.sample as i64 + start;
        let hi = cue.sample as i64 + end;
        if lo < 0 || hi > total as i64 {
            return Err(Error::Range { cue_index, cue: cue.sample, len: total });
        }
        trials.push(Trial::new(slice_cols(continuous, lo as usize, hi as usize), cue.label));
    }
    TrialSet::new(trials, fs, class_names)
}

/// Crops every trial of a set to `window`, measured from each trial's
/// first sample.
pub fn crop_set(set: &TrialSet, window: [f64; 2]) -> Result<TrialSet> {
    let (start, end) = window_offsets(window, set.fs)?;
    let total = set.samples();
    let trials = set
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if start < 0 || end > total as i64 {
                return Err(Error::Range { cue_index: i, cue: 0, len: total });
            }
            Ok(Trial { data: slice_cols(&t.data, start as usize, end as usize), ..t.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    set.with_trials(trials)
}

fn slice_cols(m: &Matrix, lo: usize, hi: usize) -> Matrix {
    let data = (0..m.rows()).flat_map(|r| m.row(r)[lo..hi].iter().copied()).collect();
    Matrix::from_vec(m.rows(), hi - lo, data).expect("non-empty slice")
}
