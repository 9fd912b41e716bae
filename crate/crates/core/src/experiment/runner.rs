use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::data::{generate_synthetic, load_checkpoint, load_trialset, save_checkpoint, Checkpoint};
use crate::error::{Error, Result};
use crate::layers::{Batch, Model};
use crate::loss::{softmax_cross_entropy_with, Reduction};
use crate::optim::Optimizer;
use crate::preprocess::{prepare, Trial, TrialSet};
use crate::tensor::Rng;

use super::config::{DataConfig, ExperimentConfig};
use super::metrics::{EpochMetrics, MaskStats, MetricsReport};

const EVAL_CHUNK: usize = 64;

fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

fn tag_subject(set: TrialSet, id: u32) -> Result<TrialSet> {
    let trials = set.trials.iter().map(|t| Trial { subject_id: id, ..t.clone() }).collect();
    set.with_trials(trials)
}

/// Loads or generates the raw train/test splits. Relative paths resolve
/// against `base`.
pub fn load_data(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<(TrialSet, TrialSet)> {
    match &cfg.data {
        DataConfig::Synthetic(s) => generate_synthetic(s),
        DataConfig::Files { train, test } => {
            Ok((load_trialset(&resolve(base, train))?, load_trialset(&resolve(base, test))?))
        }
        DataConfig::Pooled { subjects, target } => {
            let mut train_parts = Vec::new();
            let mut test = None;
            for s in subjects {
                if s.id == *target {
                    test = Some(tag_subject(load_trialset(&resolve(base, &s.test))?, s.id)?);
                } else {
                    train_parts.push(tag_subject(load_trialset(&resolve(base, &s.train))?, s.id)?);
                    train_parts.push(tag_subject(load_trialset(&resolve(base, &s.test))?, s.id)?);
                }
            }
            let refs: Vec<&TrialSet> = train_parts.iter().collect();
            let test = test.ok_or_else(|| Error::Config(format!("pooled target subject {target} is not listed")))?;
            Ok((TrialSet::concat(&refs)?, test))
        }
    }
}

/// Raw splits after the configured preprocessing pipeline.
pub fn prepare_data(cfg: &ExperimentConfig, base: Option<&Path>) -> Result<(TrialSet, TrialSet)> {
    let (train, test) = load_data(cfg, base)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Config("train and test splits must both contain trials".into()));
    }
    cfg.preprocess.validate(train.fs).map_err(|e| Error::Config(e.to_string()))?;
    let p = prepare(&train, &test, &cfg.preprocess)?;
    Ok((p.train, p.test))
}

#[derive(Debug, Clone)]
pub struct CheckpointPolicy {
    pub path: PathBuf,
    /// Save after every `every` completed epochs and at the end.
    pub every: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub checkpoint: Option<CheckpointPolicy>,
    pub resume: Option<Checkpoint>,
    /// Stop once this many epochs are complete, leaving the report empty.
    pub stop_after: Option<usize>,
}

impl RunOptions {
    pub fn resume_from(path: &Path) -> Result<Self> {
        Ok(Self { resume: Some(load_checkpoint(path)?), ..Self::default() })
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub per_epoch: Vec<EpochMetrics>,
    /// `None` when the run stopped before its final epoch.
    pub report: Option<MetricsReport>,
    pub model: Model,
    pub optimizer: Optimizer,
    /// State after the last completed epoch.
    pub checkpoint: Checkpoint,
}

/// Fraction of correctly classified trials. Uses no randomness.
pub fn evaluate(model: &mut Model, set: &TrialSet) -> Result<f64> {
    let mut correct = 0usize;
    for chunk in set.trials.chunks(EVAL_CHUNK) {
        let x = Batch::Seq(chunk.iter().map(|t| t.data.clone()).collect());
        let logits = model.forward(x, false)?;
        correct += Model::predict(&logits).iter().zip(chunk).filter(|(p, t)| **p == t.label).count();
    }
    Ok(correct as f64 / set.len() as f64)
}

/// Builds the model for `cfg` and the given data shape.
pub fn build_model(cfg: &ExperimentConfig, train: &TrialSet) -> Result<Model> {
    let specs = cfg.model.layer_specs()?;
    Model::build(&specs, &cfg.classifier, train.channel_count, train.samples(), train.n_classes(), cfg.seed)
}

fn check_compatible(train: &TrialSet, test: &TrialSet) -> Result<()> {
    if train.is_empty() || test.is_empty() {
        return Err(Error::Config("train and test splits must both contain trials".into()));
    }
    if (train.channel_count, train.samples(), train.n_classes()) != (test.channel_count, test.samples(), test.n_classes())
    {
        return Err(Error::shape(format!(
            "train trials are {}x{} with {} classes, test trials {}x{} with {}",
            train.channel_count,
            train.samples(),
            train.n_classes(),
            test.channel_count,
            test.samples(),
            test.n_classes()
        )));
    }
    Ok(())
}

fn history_pairs(h: &[EpochMetrics]) -> Vec<(f64, f64)> {
    h.iter().map(|e| (e.train_loss, e.test_accuracy)).collect()
}

/// Trains on already prepared splits.
pub fn run_with_data(cfg: &ExperimentConfig, train: &TrialSet, test: &TrialSet, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    check_compatible(train, test)?;
    let started = Instant::now();
    let hash = cfg.hash();
    let mut model = build_model(cfg, train)?;
    let mut optimizer = Optimizer::new(&cfg.optimizer, &model.params_mut());
    let mut shuffle = Rng::substream(cfg.seed, "shuffle");
    let mut per_epoch = Vec::with_capacity(cfg.epochs);

    if let Some(ckpt) = &opts.resume {
        if ckpt.config_hash != hash {
            return Err(Error::Config("checkpoint was written for a different config".into()));
        }
        if ckpt.history.len() as u64 != ckpt.epoch || ckpt.epoch > cfg.epochs as u64 {
            return Err(Error::Config(format!("checkpoint epoch {} does not fit this run", ckpt.epoch)));
        }
        ckpt.restore(&mut model, &mut optimizer)?;
        shuffle = ckpt.rng("shuffle").cloned().ok_or_else(|| Error::Config("checkpoint lacks shuffle state".into()))?;
        per_epoch.extend(ckpt.history.iter().enumerate().map(|(i, &(train_loss, test_accuracy))| EpochMetrics {
            epoch: i + 1,
            train_loss,
            test_accuracy,
        }));
    }

    let last = opts.stop_after.map_or(cfg.epochs, |s| s.min(cfg.epochs));
    let n = train.len();
    log::info!("training {} epochs on {n} trials, {} parameters", cfg.epochs, model.parameter_count());
    for epoch in per_epoch.len() + 1..=last {
        let mut order: Vec<usize> = (0..n).collect();
        shuffle.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = Batch::Seq(idx.iter().map(|&i| train.trials[i].data.clone()).collect());
            let targets: Vec<usize> = idx.iter().map(|&i| train.trials[i].label).collect();
            let logits = model.forward(x, true)?;
            let r = softmax_cross_entropy_with(&logits, &targets, cfg.loss_reduction)?;
            if !r.loss.is_finite() || !r.grad_logits.is_finite() {
                return Err(Error::NonFinite { epoch, batch: b + 1 });
            }
            loss_sum += match cfg.loss_reduction {
                Reduction::Sum => r.loss,
                Reduction::Mean => r.loss * idx.len() as f64,
            };
            model.backward(&r.grad_logits)?;
            optimizer.step(&mut model.params_mut())?;
            model.verify_invariants()?;
        }
        let test_accuracy = evaluate(&mut model, test)?;
        let m = EpochMetrics { epoch, train_loss: loss_sum / n as f64, test_accuracy };
        log::debug!("epoch {epoch}: loss {:.6} acc {:.4}", m.train_loss, m.test_accuracy);
        per_epoch.push(m);
        if let Some(policy) = &opts.checkpoint {
            if (policy.every > 0 && epoch % policy.every == 0) || epoch == last {
                let c = Checkpoint::capture(
                    &model,
                    &optimizer,
                    epoch as u64,
                    &[("shuffle", &shuffle)],
                    &history_pairs(&per_epoch),
                    &hash,
                );
                save_checkpoint(&c, &policy.path)?;
            }
        }
    }

    let checkpoint =
        Checkpoint::capture(&model, &optimizer, per_epoch.len() as u64, &[("shuffle", &shuffle)], &history_pairs(&per_epoch), &hash);
    let report = if per_epoch.len() == cfg.epochs {
        Some(MetricsReport::summarize(
            per_epoch.clone(),
            cfg.metrics.median_window,
            cfg.metrics.smooth_width,
            model.classifier_mask().map(MaskStats::of),
            model.parameter_count(),
            hash,
            started.elapsed().as_secs_f64(),
        )?)
    } else {
        None
    };
    Ok(RunOutcome { per_epoch, report, model, optimizer, checkpoint })
}

/// Full protocol: load, preprocess, train, evaluate every epoch.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    cfg.validate()?;
    let (train, test) = prepare_data(cfg, None)?;
    let out = run_with_data(cfg, &train, &test, &RunOptions::default())?;
    Ok(out.report.expect("full run produces a report"))
}
