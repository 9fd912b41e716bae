//! `.frz` trial files: a fixed little-endian header followed by f64 samples
//! (trial, channel, sample order) and u16 labels.

use std::path::Path;

use super::binio::{read_file, write_atomic, Reader, Writer};
use crate::error::{Error, Result};
use crate::preprocess::{default_class_names, Trial, TrialSet};
use crate::tensor::Matrix;

pub const TRIAL_MAGIC: &[u8; 8] = b"FRZNET01";
pub const TRIAL_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 8 + 4 + 4 * 3 + 8 + 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialFileHeader {
    pub version: u32,
    pub n_trials: u32,
    pub n_channels: u32,
    pub n_samples: u32,
    pub fs: f64,
    pub n_classes: u32,
}

impl TrialFileHeader {
    /// Total file size implied by the header.
    pub fn expected_len(&self) -> u64 {
        let n = u64::from(self.n_trials);
        HEADER_LEN as u64 + n * u64::from(self.n_channels) * u64::from(self.n_samples) * 8 + n * 2
    }
}

fn count(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::domain(format!("{what} {n} does not fit the trial format")))
}

pub fn encode_trialset(set: &TrialSet) -> Result<Vec<u8>> {
    set.validate()?;
    let mut w = Writer::default();
    w.bytes(TRIAL_MAGIC);
    w.u32(TRIAL_VERSION);
    w.u32(count(set.len(), "trial count")?);
    w.u32(count(set.channel_count, "channel count")?);
    w.u32(count(set.samples(), "sample count")?);
    w.f64(set.fs);
    w.u32(count(set.n_classes(), "class count")?);
    for t in &set.trials {
        w.f64s(t.data.as_slice());
    }
    for t in &set.trials {
        w.u16(u16::try_from(t.label).map_err(|_| Error::domain(format!("label {} exceeds u16", t.label)))?);
    }
    Ok(w.buf)
}

pub fn decode_trialset(bytes: &[u8]) -> Result<TrialSet> {
    let mut r = Reader::new(bytes);
    r.magic(TRIAL_MAGIC)?;
    let version = r.u32("version")?;
    if version != TRIAL_VERSION {
        return Err(Error::Format { offset: 8, msg: format!("unsupported version {version}") });
    }
    let header = TrialFileHeader {
        version,
        n_trials: r.u32("n_trials")?,
        n_channels: r.u32("n_channels")?,
        n_samples: r.u32("n_samples")?,
        fs: r.f64("fs")?,
        n_classes: r.u32("n_classes")?,
    };
    let expected = header.expected_len();
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::Format {
            offset: actual,
            msg: format!("truncated payload: header declares {expected} bytes, file has {actual}"),
        });
    }
    if actual > expected {
        return Err(Error::Format { offset: expected, msg: format!("{} bytes past declared payload", actual - expected) });
    }
    let (n, c, s) = (header.n_trials as usize, header.n_channels as usize, header.n_samples as usize);
    if n > 0 && (c == 0 || s == 0) {
        return Err(Error::Format { offset: 16, msg: format!("empty trial shape {c}x{s}") });
    }
    let mut data = Vec::with_capacity(n);
    for i in 0..n {
        let vals = r.f64s(c * s, &format!("trial {i}"))?;
        data.push(Matrix::from_vec(c, s, vals)?);
    }
    let mut trials = Vec::with_capacity(n);
    for m in data {
        let at = r.pos() as u64;
        let label = r.u16("label")? as usize;
        if label >= header.n_classes as usize {
            return Err(Error::Format { offset: at, msg: format!("label {label} >= n_classes {}", header.n_classes) });
        }
        trials.push(Trial::new(m, label));
    }
    r.finish()?;
    TrialSet::new(trials, header.fs, default_class_names(header.n_classes as usize)).map_err(|e| Error::Format {
        offset: 0,
        msg: format!("invalid trial set: {e}"),
    })
}

pub fn save_trialset(set: &TrialSet, path: &Path) -> Result<()> {
    write_atomic(path, &encode_trialset(set)?)
}

pub fn load_trialset(path: &Path) -> Result<TrialSet> {
    decode_trialset(&read_file(path)?)
}
