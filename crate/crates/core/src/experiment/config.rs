use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::SynthConfig;
use crate::error::{Error, Result};
use crate::layers::{ActivationKind, ClassifierMode, ClassifierSpec, LayerSpec};
use crate::loss::Reduction;
use crate::optim::OptimizerConfig;
use crate::preprocess::PreprocessConfig;

/// Named layer stacks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// temporal conv -> channel mix -> square -> mean pool -> log -> dropout
    Shallow,
    /// No feature layers; the classifier sees the flattened input.
    Linear,
}

impl Preset {
    pub fn layers(self) -> Vec<LayerSpec> {
        match self {
            Preset::Shallow => vec![
                LayerSpec::Conv1d { out_channels: 6, kernel_len: 11, stride: 3 },
                LayerSpec::ChannelMix { out_channels: 6 },
                LayerSpec::Activation { function: ActivationKind::Square },
                LayerSpec::MeanPool { kernel: 25, stride: 10 },
                LayerSpec::Activation { function: ActivationKind::Log },
                LayerSpec::Dropout { p: 0.5 },
            ],
            Preset::Linear => Vec::new(),
        }
    }
}

/// Exactly one of `preset` or `layers`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<LayerSpec>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { preset: Some(Preset::Shallow), layers: None }
    }
}

impl ModelConfig {
    pub fn layer_specs(&self) -> Result<Vec<LayerSpec>> {
        match (&self.preset, &self.layers) {
            (Some(p), None) => Ok(p.layers()),
            (None, Some(l)) => Ok(l.clone()),
            _ => Err(Error::Config("model needs exactly one of \"preset\" or \"layers\"".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectFiles {
    pub id: u32,
    pub train: PathBuf,
    pub test: PathBuf,
}

/// Where trials come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    Synthetic(SynthConfig),
    Files {
        train: PathBuf,
        test: PathBuf,
    },
    /// Train on every subject except `target` (both splits), test on the
    /// target's test split.
    Pooled {
        subjects: Vec<SubjectFiles>,
        target: u32,
    },
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Synthetic(SynthConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Inclusive 1-based epoch range; `null` disables the median metric.
    pub median_window: Option<[usize; 2]>,
    pub smooth_width: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { median_window: Some([400, 800]), smooth_width: 20 }
    }
}

fn default_epochs() -> usize {
    800
}

fn default_batch() -> usize {
    32
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub classifier: ClassifierSpec,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub loss_reduction: Reduction,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("config serializes")))
    }

    /// Checks everything that does not need the data itself.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if let Err(e) = self.model.layer_specs() {
            problems.push(e.to_string());
        }
        if self.epochs == 0 {
            problems.push("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be at least 1".into());
        }
        let t = self.classifier.threshold_t;
        if !(0.0..=1.0).contains(&t) {
            problems.push(format!("threshold_t must lie in [0, 1], got {t}"));
        }
        if self.classifier.mode == ClassifierMode::None && t != 0.0 {
            problems.push("threshold_t needs classifier mode frozen or sparse".into());
        }
        if let Err(e) = self.optimizer.validate() {
            problems.push(e.to_string());
        }
        if let Some([lo, hi]) = self.metrics.median_window {
            if !(1 <= lo && lo < hi && hi <= self.epochs) {
                problems.push(format!("median_window [{lo}, {hi}] must satisfy 1 <= lo < hi <= epochs ({})", self.epochs));
            }
        }
        if self.metrics.smooth_width == 0 || self.metrics.smooth_width > self.epochs {
            problems.push(format!("smooth_width must lie in [1, epochs], got {}", self.metrics.smooth_width));
        }
        match &self.data {
            DataConfig::Synthetic(s) => {
                if let Err(e) = s.validate() {
                    problems.push(e.to_string());
                }
                if let Err(e) = self.preprocess.validate(s.fs) {
                    problems.push(e.to_string());
                }
            }
            DataConfig::Pooled { subjects, target } => {
                if !subjects.iter().any(|s| s.id == *target) {
                    problems.push(format!("pooled target subject {target} is not listed"));
                }
                if subjects.len() < 2 {
                    problems.push("pooled runs need at least two subjects".into());
                }
            }
            DataConfig::Files { .. } => {}
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}
