//! Softmax cross-entropy with its analytic gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// Sum over the batch.
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone)]
pub struct LossResult {
    pub loss: f64,
    /// `softmax(logits) - onehot(target)`, scaled by `1/N` under
    /// [`Reduction::Mean`].
    pub grad_logits: Matrix,
}

/// Summed cross-entropy `-sum_n log softmax(logits[n])[target_n]`.
pub fn softmax_cross_entropy(logits: &Matrix, targets: &[usize]) -> Result<LossResult> {
    softmax_cross_entropy_with(logits, targets, Reduction::Sum)
}

pub fn softmax_cross_entropy_with(logits: &Matrix, targets: &[usize], reduction: Reduction) -> Result<LossResult> {
    let (n, c) = logits.shape();
    if c < 2 {
        return Err(Error::domain(format!("need at least 2 classes, got {c}")));
    }
    if targets.len() != n {
        return Err(Error::shape(format!("{} targets for {n} rows", targets.len())));
    }
    if let Some((i, &t)) = targets.iter().enumerate().find(|(_, &t)| t >= c) {
        return Err(Error::domain(format!("target {t} at row {i} outside [0, {c})")));
    }

    let scale = match reduction {
        Reduction::Sum => 1.0,
        Reduction::Mean => 1.0 / n as f64,
    };
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(n, c);
    for (row, &target) in targets.iter().enumerate() {
        let z = logits.row(row);
        let mut arg = 0;
        for (k, &v) in z.iter().enumerate().skip(1) {
            if v > z[arg] {
                arg = k;
            }
        }
        let max = z[arg];
        // ln(sum exp(z - max)) = ln(1 + rest); ln_1p keeps confident rows exact
        let rest: f64 = z.iter().enumerate().filter(|&(k, _)| k != arg).map(|(_, &v)| (v - max).exp()).sum();
        let log_norm = rest.ln_1p();
        loss += (max - z[target]) + log_norm;
        let g = grad.row_mut(row);
        for (k, (gk, &zk)) in g.iter_mut().zip(z).enumerate() {
            let g = if k != target {
                (zk - max - log_norm).exp()
            } else if k == arg {
                -rest / (1.0 + rest)
            } else {
                (zk - max - log_norm).exp() - 1.0
            };
            *gk = g * scale;
        }
    }
    Ok(LossResult { loss: loss * scale, grad_logits: grad })
}
