//! Versioned binary training snapshots.

use std::path::Path;

use super::binio::{read_file, write_atomic, Reader, Writer};
use crate::error::{Error, Result};
use crate::layers::{Layer, MaskMatrix, MaskMode, Model};
use crate::optim::{AdamWHyper, AdamWState, Optimizer};
use crate::tensor::{Matrix, Rng};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FRZCKP01";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to continue a run bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Completed epochs.
    pub epoch: u64,
    pub config_hash: String,
    pub params: Vec<(String, Matrix)>,
    /// Keyed by the owning layer's name.
    pub masks: Vec<(String, MaskMatrix)>,
    pub optimizer: Optimizer,
    /// Dropout generators keyed by layer name, plus any run-level streams.
    pub rngs: Vec<(String, Rng)>,
    /// `(train_loss, test_accuracy)` per completed epoch.
    pub history: Vec<(f64, f64)>,
}

impl Checkpoint {
    /// Snapshots a model and optimizer. `extra_rngs` carries run-level
    /// generators such as the batch shuffler.
    pub fn capture(
        model: &Model,
        optimizer: &Optimizer,
        epoch: u64,
        extra_rngs: &[(&str, &Rng)],
        history: &[(f64, f64)],
        config_hash: &str,
    ) -> Self {
        let params = model.params().into_iter().map(|(n, m)| (n, m.clone())).collect();
        let mut masks = Vec::new();
        let mut rngs = Vec::new();
        for (i, layer) in model.layers().iter().enumerate() {
            match layer {
                Layer::FrozenDense(fd) => masks.push((model.layer_name(i), fd.mask.clone())),
                Layer::Dropout(d) => rngs.push((model.layer_name(i), d.rng.clone())),
                _ => {}
            }
        }
        rngs.extend(extra_rngs.iter().map(|(k, r)| (k.to_string(), (*r).clone())));
        Self {
            epoch,
            config_hash: config_hash.to_string(),
            params,
            masks,
            optimizer: optimizer.clone(),
            rngs,
            history: history.to_vec(),
        }
    }

    pub fn rng(&self, key: &str) -> Option<&Rng> {
        self.rngs.iter().find(|(k, _)| k == key).map(|(_, r)| r)
    }

    /// Loads the snapshot into a freshly built model and optimizer of the
    /// same architecture.
    pub fn restore(&self, model: &mut Model, optimizer: &mut Optimizer) -> Result<()> {
        let mut targets = model.params_mut();
        if targets.len() != self.params.len() {
            return Err(Error::shape(format!(
                "checkpoint has {} parameter tensors, model has {}",
                self.params.len(),
                targets.len()
            )));
        }
        for (p, (name, saved)) in targets.iter_mut().zip(&self.params) {
            if &p.name != name || p.value.shape() != saved.shape() {
                return Err(Error::shape(format!(
                    "layer {}: checkpoint holds {name} {:?}, model expects {:?}",
                    p.name,
                    saved.shape(),
                    p.value.shape()
                )));
            }
        }
        for (p, (_, saved)) in targets.iter_mut().zip(&self.params) {
            p.value.clone_from(saved);
        }
        let shapes: Vec<_> = targets.iter().map(|p| p.value.shape()).collect();
        drop(targets);

        match (&self.optimizer, &*optimizer) {
            (Optimizer::AdamW(s), Optimizer::AdamW(_)) => {
                for (i, (m, shape)) in s.m.iter().zip(&shapes).enumerate() {
                    if m.shape() != *shape || s.m.len() != shapes.len() {
                        return Err(Error::shape(format!("optimizer moment {i}: {:?} vs {shape:?}", m.shape())));
                    }
                }
            }
            (Optimizer::Sgd { .. }, Optimizer::Sgd { .. }) => {}
            _ => return Err(Error::Config("checkpoint optimizer kind differs from config".into())),
        }
        *optimizer = self.optimizer.clone();

        let names: Vec<String> = (0..model.layers().len()).map(|i| model.layer_name(i)).collect();
        for (name, layer) in names.iter().zip(model.layers_mut()) {
            match layer {
                Layer::FrozenDense(fd) => {
                    let mask = self
                        .masks
                        .iter()
                        .find(|(n, _)| n == name)
                        .map(|(_, m)| m)
                        .ok_or_else(|| Error::shape(format!("layer {name}: no mask in checkpoint")))?;
                    if mask.shape() != fd.mask.shape() {
                        return Err(Error::shape(format!(
                            "layer {name}: mask {:?} vs {:?}",
                            mask.shape(),
                            fd.mask.shape()
                        )));
                    }
                    fd.mask = mask.clone();
                    // masked entries never move, so current weights equal their initial values there
                    fd.frozen_snapshot = fd.dense.weight.clone();
                }
                Layer::Dropout(d) => {
                    d.rng = self
                        .rng(name)
                        .cloned()
                        .ok_or_else(|| Error::shape(format!("layer {name}: no generator state in checkpoint")))?;
                }
                _ => {}
            }
        }
        model.verify_invariants()
    }
}

fn mode_code(mode: MaskMode) -> u8 {
    match mode {
        MaskMode::Frozen => 0,
        MaskMode::Sparse => 1,
    }
}

pub fn encode_checkpoint(c: &Checkpoint) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(CHECKPOINT_MAGIC);
    w.u32(CHECKPOINT_VERSION);
    w.u64(c.epoch);
    w.str(&c.config_hash);
    w.len_u32(c.params.len());
    for (name, m) in &c.params {
        w.str(name);
        w.matrix(m);
    }
    w.len_u32(c.masks.len());
    for (name, m) in &c.masks {
        w.str(name);
        w.f64(m.threshold);
        w.u8(mode_code(m.mode));
        w.u64(m.seed);
        w.matrix(&m.keep);
    }
    match &c.optimizer {
        Optimizer::Sgd { lr } => {
            w.u8(0);
            w.f64(*lr);
        }
        Optimizer::AdamW(s) => {
            w.u8(1);
            let h = s.hyper;
            w.f64s(&[h.lr, h.beta1, h.beta2, h.eps, h.weight_decay]);
            w.u64(s.step_count);
            w.len_u32(s.m.len());
            for m in s.m.iter().chain(&s.v) {
                w.matrix(m);
            }
        }
    }
    w.len_u32(c.rngs.len());
    for (name, r) in &c.rngs {
        w.str(name);
        w.u64(r.seed());
        for s in r.state() {
            w.u64(s);
        }
    }
    w.len_u32(c.history.len());
    for &(loss, acc) in &c.history {
        w.f64(loss);
        w.f64(acc);
    }
    w.buf
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::new(bytes);
    r.magic(CHECKPOINT_MAGIC)?;
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format { offset: 8, msg: format!("checkpoint version {version}, expected {CHECKPOINT_VERSION}") });
    }
    let epoch = r.u64("epoch")?;
    let config_hash = r.str("config hash")?;
    let n = r.u32("parameter count")?;
    let mut params = Vec::new();
    for _ in 0..n {
        let name = r.str("parameter name")?;
        let m = r.matrix(&name)?;
        params.push((name, m));
    }
    let n = r.u32("mask count")?;
    let mut masks = Vec::new();
    for _ in 0..n {
        let name = r.str("mask name")?;
        let threshold = r.f64("threshold")?;
        let at = r.pos();
        let mode = match r.u8("mask mode")? {
            0 => MaskMode::Frozen,
            1 => MaskMode::Sparse,
            other => return Err(Error::Format { offset: at as u64, msg: format!("unknown mask mode {other}") }),
        };
        let seed = r.u64("mask seed")?;
        let keep = r.matrix("mask")?;
        masks.push((name, MaskMatrix { keep, threshold, mode, seed }));
    }
    let at = r.pos();
    let optimizer = match r.u8("optimizer kind")? {
        0 => Optimizer::Sgd { lr: r.f64("lr")? },
        1 => {
            let h = r.f64s(5, "adamw hyperparameters")?;
            let hyper = AdamWHyper { lr: h[0], beta1: h[1], beta2: h[2], eps: h[3], weight_decay: h[4] };
            let step_count = r.u64("step count")?;
            let k = r.u32("moment count")?;
            let m = (0..k).map(|_| r.matrix("first moment")).collect::<Result<Vec<_>>>()?;
            let v = (0..k).map(|_| r.matrix("second moment")).collect::<Result<Vec<_>>>()?;
            Optimizer::AdamW(AdamWState { m, v, step_count, hyper })
        }
        other => return Err(Error::Format { offset: at as u64, msg: format!("unknown optimizer kind {other}") }),
    };
    let n = r.u32("rng count")?;
    let mut rngs = Vec::new();
    for _ in 0..n {
        let name = r.str("rng name")?;
        let seed = r.u64("rng seed")?;
        let mut state = [0u64; 4];
        for s in &mut state {
            *s = r.u64("rng state")?;
        }
        rngs.push((name, Rng::from_state(seed, state)));
    }
    let n = r.u32("history length")?;
    let mut history = Vec::new();
    for _ in 0..n {
        history.push((r.f64("train loss")?, r.f64("test accuracy")?));
    }
    r.finish()?;
    Ok(Checkpoint { epoch, config_hash, params, masks, optimizer, rngs, history })
}

pub fn save_checkpoint(c: &Checkpoint, path: &Path) -> Result<()> {
    write_atomic(path, &encode_checkpoint(c))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&read_file(path)?)
}
