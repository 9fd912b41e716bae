use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{default_class_names, Trial, TrialSet};
use crate::tensor::{Matrix, Rng};

/// Length of the raised-cosine onset ramp.
pub const ONSET_SECONDS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_classes: usize,
    pub n_channels: usize,
    pub trial_seconds: f64,
    pub fs: f64,
    pub trials_per_class_train: usize,
    pub trials_per_class_test: usize,
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_classes: 4,
            n_channels: 22,
            trial_seconds: 4.0,
            fs: 250.0,
            trials_per_class_train: 72,
            trials_per_class_test: 72,
            snr_db: 0.0,
            seed: 0,
        }
    }
}

/// Oscillation frequency of class `k`.
pub fn class_frequency(k: usize) -> f64 {
    8.0 + 3.0 * k as f64
}

impl SynthConfig {
    pub fn samples(&self) -> usize {
        (self.trial_seconds * self.fs).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::Config(format!("n_classes must be at least 2, got {}", self.n_classes)));
        }
        if self.n_channels == 0 || self.trials_per_class_train == 0 || self.trials_per_class_test == 0 {
            return Err(Error::Config("channel and trial counts must be at least 1".into()));
        }
        if !(self.fs > 0.0 && self.trial_seconds > 0.0) || self.samples() == 0 {
            return Err(Error::Config("fs and trial_seconds must give at least one sample".into()));
        }
        let top = class_frequency(self.n_classes - 1);
        if top >= self.fs / 2.0 {
            return Err(Error::Config(format!("class frequency {top} Hz is not below Nyquist {} Hz", self.fs / 2.0)));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        Ok(())
    }
}

/// Per-class spatial patterns, unit RMS across channels.
pub fn mixing_vectors(cfg: &SynthConfig) -> Vec<Vec<f64>> {
    let mut rng = Rng::substream(cfg.seed, "mixing");
    (0..cfg.n_classes)
        .map(|_| {
            let a: Vec<f64> = (0..cfg.n_channels).map(|_| rng.next_normal()).collect();
            let rms = (a.iter().map(|v| v * v).sum::<f64>() / a.len() as f64).sqrt();
            a.into_iter().map(|v| v / rms).collect()
        })
        .collect()
}

fn envelope(n: usize, fs: f64) -> f64 {
    let ramp = ONSET_SECONDS * fs;
    let x = n as f64;
    if x >= ramp {
        1.0
    } else {
        0.5 * (1.0 - (PI * x / ramp).cos())
    }
}

fn generate_split(cfg: &SynthConfig, mixing: &[Vec<f64>], key: &str, per_class: usize, session: u32) -> Result<TrialSet> {
    let mut rng = Rng::substream(cfg.seed, key);
    let mut labels: Vec<usize> = (0..cfg.n_classes).flat_map(|k| std::iter::repeat(k).take(per_class)).collect();
    rng.shuffle(&mut labels);
    let (channels, samples) = (cfg.n_channels, cfg.samples());
    let noise_scale = 10f64.powf(-cfg.snr_db / 20.0);
    let mut trials = Vec::with_capacity(labels.len());
    for &k in &labels {
        let f = class_frequency(k);
        let phase = rng.uniform_range(0.0, 2.0 * PI);
        let wave: Vec<f64> =
            (0..samples).map(|n| envelope(n, cfg.fs) * (2.0 * PI * f * n as f64 / cfg.fs + phase).sin()).collect();
        let mut data = Matrix::zeros(channels, samples);
        for (c, &a) in mixing[k].iter().enumerate() {
            for (d, &w) in data.row_mut(c).iter_mut().zip(&wave) {
                *d = a * w;
            }
        }
        let signal_power = data.as_slice().iter().map(|v| v * v).sum::<f64>() / data.len() as f64;
        let sigma = signal_power.sqrt() * noise_scale;
        for d in data.as_mut_slice() {
            *d += sigma * rng.next_normal();
        }
        trials.push(Trial { session_id: session, ..Trial::new(data, k) });
    }
    TrialSet::new(trials, cfg.fs, default_class_names(cfg.n_classes))
}

/// Train and test splits from disjoint substreams of `cfg.seed`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<(TrialSet, TrialSet)> {
    cfg.validate()?;
    let mixing = mixing_vectors(cfg);
    let train = generate_split(cfg, &mixing, "train", cfg.trials_per_class_train, 0)?;
    let test = generate_split(cfg, &mixing, "test", cfg.trials_per_class_test, 1)?;
    Ok((train, test))
}
