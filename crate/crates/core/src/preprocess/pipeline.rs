use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

use super::align::alignment_matrix;
use super::epoch::crop_set;
use super::fir::{design_bandpass_fir, filter_signal, FirFilter, DEFAULT_ORDER};
use super::normalize::normalize_set;
use super::trial::{Trial, TrialSet};

/// Which trials estimate each subject's reference covariance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignScope {
    /// Training trials of the subject; test trials only for subjects with
    /// no training trials.
    #[default]
    PerSplit,
    /// Training and test trials of the subject together.
    Pooled,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub filter: bool,
    pub band: [f64; 2],
    pub filter_order: usize,
    /// Crop relative to each trial's first sample, applied after filtering.
    pub window_seconds: Option<[f64; 2]>,
    pub normalize: bool,
    pub align: AlignScope,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            filter: true,
            band: [4.0, 38.0],
            filter_order: DEFAULT_ORDER,
            window_seconds: None,
            normalize: true,
            align: AlignScope::PerSplit,
        }
    }
}

impl PreprocessConfig {
    /// Checks band edges and order against a sampling rate.
    pub fn validate(&self, fs: f64) -> Result<()> {
        if self.filter {
            design_bandpass_fir(self.filter_order, self.band[0], self.band[1], fs)?;
        }
        if let Some([t0, t1]) = self.window_seconds {
            if !(t0 >= 0.0 && t0 < t1) {
                return Err(Error::Config(format!("window_seconds must satisfy 0 <= start < end, got [{t0}, {t1}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: TrialSet,
    pub test: TrialSet,
    /// Alignment matrix per subject, ascending subject id.
    pub alignment: Vec<(u32, Matrix)>,
}

/// Applies a filter to every trial of a set.
pub fn filter_set(set: &TrialSet, filter: &FirFilter) -> Result<TrialSet> {
    let trials = set
        .trials
        .par_iter()
        .map(|t| Ok(Trial { data: filter_signal(&t.data, filter)?, ..t.clone() }))
        .collect::<Result<Vec<_>>>()?;
    set.with_trials(trials)
}

fn subject_trials(set: &TrialSet, subject: u32) -> Vec<&Trial> {
    set.trials.iter().filter(|t| t.subject_id == subject).collect()
}

/// filter -> crop -> normalize -> align on a train/test pair.
pub fn prepare(train: &TrialSet, test: &TrialSet, cfg: &PreprocessConfig) -> Result<Prepared> {
    if train.fs != test.fs || train.channel_count != test.channel_count && !test.is_empty() {
        return Err(Error::shape("train and test sets differ in fs or channel count"));
    }
    cfg.validate(train.fs)?;
    let stage = |set: &TrialSet| -> Result<TrialSet> {
        let mut s = set.clone();
        if cfg.filter {
            let f = design_bandpass_fir(cfg.filter_order, cfg.band[0], cfg.band[1], s.fs)?;
            s = filter_set(&s, &f)?;
        }
        if let Some(w) = cfg.window_seconds {
            s = crop_set(&s, w)?;
        }
        if cfg.normalize {
            s = normalize_set(&s)?;
        }
        Ok(s)
    };
    let mut train = stage(train)?;
    let mut test = stage(test)?;
    let mut alignment = Vec::new();
    if cfg.align != AlignScope::None {
        let mut subjects: Vec<u32> = train.trials.iter().chain(&test.trials).map(|t| t.subject_id).collect();
        subjects.sort_unstable();
        subjects.dedup();
        for s in subjects {
            let reference = match cfg.align {
                AlignScope::PerSplit => {
                    let r = subject_trials(&train, s);
                    if r.is_empty() {
                        subject_trials(&test, s)
                    } else {
                        r
                    }
                }
                _ => subject_trials(&train, s).into_iter().chain(subject_trials(&test, s)).collect(),
            };
            alignment.push((s, alignment_matrix(&reference)?));
        }
        let apply = |set: &TrialSet| -> Result<TrialSet> {
            let trials = set
                .trials
                .iter()
                .map(|t| {
                    let m = &alignment.iter().find(|(s, _)| *s == t.subject_id).expect("subject listed").1;
                    Ok(Trial { data: crate::tensor::matmul(m, &t.data)?, ..t.clone() })
                })
                .collect::<Result<Vec<_>>>()?;
            set.with_trials(trials)
        };
        train = apply(&train)?;
        test = apply(&test)?;
    }
    Ok(Prepared { train, test, alignment })
}
