use crate::error::{Error, Result};
use crate::tensor::{matmul, sym_inv_sqrt, Matrix};

use super::trial::{Trial, TrialSet};

/// Eigenvalue floor used when inverting the reference covariance.
pub const ALIGN_EIG_FLOOR: f64 = 1e-10;

/// `(1/N) sum_i x_i x_i^T`, accumulated in ascending trial order.
pub fn mean_covariance(trials: &[&Trial]) -> Result<Matrix> {
    let first = trials.first().ok_or_else(|| Error::domain("cannot align an empty trial set"))?;
    let c = first.channels();
    let mut acc = Matrix::zeros(c, c);
    for t in trials {
        if t.channels() != c {
            return Err(Error::shape(format!("trial has {} channels, expected {c}", t.channels())));
        }
        acc.add_assign(&gram(&t.data))?;
    }
    Ok(acc.scale(1.0 / trials.len() as f64))
}

/// `x x^T`, computed on the upper triangle and mirrored.
fn gram(x: &Matrix) -> Matrix {
    let c = x.rows();
    let mut g = Matrix::zeros(c, c);
    for i in 0..c {
        for j in i..c {
            let v: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| a * b).sum();
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `R^{-1/2}` for the trials' mean covariance `R`.
pub fn alignment_matrix(trials: &[&Trial]) -> Result<Matrix> {
    sym_inv_sqrt(&mean_covariance(trials)?, ALIGN_EIG_FLOOR)
}

/// Left-multiplies every trial by `m`.
pub fn apply_alignment(set: &TrialSet, m: &Matrix) -> Result<TrialSet> {
    let trials = set
        .trials
        .iter()
        .map(|t| Ok(Trial { data: matmul(m, &t.data)?, ..t.clone() }))
        .collect::<Result<Vec<_>>>()?;
    set.with_trials(trials)
}

/// Whitens a set by its own mean covariance. Returns the aligned set and
/// the matrix that was applied.
pub fn euclidean_align(set: &TrialSet) -> Result<(TrialSet, Matrix)> {
    let refs: Vec<&Trial> = set.trials.iter().collect();
    let m = alignment_matrix(&refs)?;
    Ok((apply_alignment(set, &m)?, m))
}
