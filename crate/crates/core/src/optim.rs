//! SGD and AdamW honoring the freeze contract.
//!
//! Gradients of masked layers arrive already multiplied by the keep-mask.
//! On top of that, every entry whose `keep` is zero is skipped outright: no
//! moment update, no step, no decoupled weight decay. Frozen weights are
//! therefore bit-identical to their initial value for the whole run and
//! their AdamW moments stay at exactly zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::ParamMut;
use crate::tensor::Matrix;

fn check_param(p: &ParamMut<'_>) -> Result<()> {
    if p.value.shape() != p.grad.shape() {
        return Err(Error::shape(format!(
            "{}: parameter {:?} vs gradient {:?}",
            p.name,
            p.value.shape(),
            p.grad.shape()
        )));
    }
    if let Some(keep) = p.keep {
        if keep.shape() != p.value.shape() {
            return Err(Error::shape(format!("{}: mask {:?} vs parameter {:?}", p.name, keep.shape(), p.value.shape())));
        }
    }
    Ok(())
}

#[inline]
fn trainable(keep: Option<&Matrix>, idx: usize) -> bool {
    keep.map_or(true, |k| k.as_slice()[idx] != 0.0)
}

/// `p := p - lr * g` on every trainable entry.
pub fn sgd_step(params: &mut [ParamMut<'_>], lr: f64) -> Result<()> {
    for p in params.iter() {
        check_param(p)?;
    }
    for p in params.iter_mut() {
        let keep = p.keep;
        for (idx, (w, g)) in p.value.as_mut_slice().iter_mut().zip(p.grad.as_slice()).enumerate() {
            if trainable(keep, idx) {
                *w -= lr * g;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamWHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWHyper {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub step_count: u64,
    pub hyper: AdamWHyper,
}

impl AdamWState {
    /// Zero moments for parameters of the given shapes.
    pub fn new(hyper: AdamWHyper, shapes: &[(usize, usize)]) -> Self {
        Self {
            m: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            v: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            step_count: 0,
            hyper,
        }
    }

    pub fn for_params(hyper: AdamWHyper, params: &[ParamMut<'_>]) -> Self {
        let shapes: Vec<_> = params.iter().map(|p| p.value.shape()).collect();
        Self::new(hyper, &shapes)
    }
}

/// One AdamW step with decoupled weight decay:
/// `p := p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p`.
pub fn adamw_step(state: &mut AdamWState, params: &mut [ParamMut<'_>]) -> Result<()> {
    if state.m.len() != params.len() {
        return Err(Error::shape(format!("optimizer tracks {} tensors, got {}", state.m.len(), params.len())));
    }
    for (p, m) in params.iter().zip(&state.m) {
        check_param(p)?;
        if m.shape() != p.value.shape() {
            return Err(Error::shape(format!("{}: moment {:?} vs parameter {:?}", p.name, m.shape(), p.value.shape())));
        }
    }

    state.step_count += 1;
    let AdamWHyper { lr, beta1, beta2, eps, weight_decay } = state.hyper;
    let t = i32::try_from(state.step_count).unwrap_or(i32::MAX);
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);

    for ((p, m), v) in params.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        let keep = p.keep;
        let grads = p.grad.as_slice();
        let entries = p.value.as_mut_slice().iter_mut().zip(m.as_mut_slice()).zip(v.as_mut_slice());
        for (idx, ((w, mi), vi)) in entries.enumerate() {
            if !trainable(keep, idx) {
                continue;
            }
            let g = grads[idx];
            *mi = beta1 * *mi + (1.0 - beta1) * g;
            *vi = beta2 * *vi + (1.0 - beta2) * g * g;
            let m_hat = *mi / bc1;
            let v_hat = *vi / bc2;
            *w = *w - lr * (m_hat / (v_hat.sqrt() + eps)) - lr * weight_decay * *w;
        }
    }
    Ok(())
}

/// Optimizer selection from an experiment config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Sgd { lr: f64 },
    Adamw {
        #[serde(flatten)]
        hyper: AdamWHyper,
    },
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Adamw { hyper: AdamWHyper::default() }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let lr = match self {
            OptimizerConfig::Sgd { lr } => *lr,
            OptimizerConfig::Adamw { hyper } => {
                if !(0.0..1.0).contains(&hyper.beta1) || !(0.0..1.0).contains(&hyper.beta2) {
                    return Err(Error::Config("AdamW betas must lie in [0, 1)".into()));
                }
                if !(hyper.eps > 0.0) || !(hyper.weight_decay >= 0.0) {
                    return Err(Error::Config("AdamW eps must be > 0 and weight_decay >= 0".into()));
                }
                hyper.lr
            }
        };
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
        }
        Ok(())
    }
}

/// Live optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimizer {
    Sgd { lr: f64 },
    AdamW(AdamWState),
}

impl Optimizer {
    pub fn new(config: &OptimizerConfig, params: &[ParamMut<'_>]) -> Self {
        match *config {
            OptimizerConfig::Sgd { lr } => Optimizer::Sgd { lr },
            OptimizerConfig::Adamw { hyper } => Optimizer::AdamW(AdamWState::for_params(hyper, params)),
        }
    }

    pub fn step(&mut self, params: &mut [ParamMut<'_>]) -> Result<()> {
        match self {
            Optimizer::Sgd { lr } => sgd_step(params, *lr),
            Optimizer::AdamW(state) => adamw_step(state, params),
        }
    }
}
