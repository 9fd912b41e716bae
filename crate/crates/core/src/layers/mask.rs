use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Matrix, Rng};

/// What happens to masked weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Masked weights keep their initial values; forward pass is unchanged.
    Frozen,
    /// Masked weights are pinned to zero in both passes.
    Sparse,
}

/// Binary keep-matrix for a weight-freezing layer. `keep == 0` marks a
/// frozen (or pruned) weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskMatrix {
    pub keep: Matrix,
    pub threshold: f64,
    pub mode: MaskMode,
    pub seed: u64,
}

/// Draws `u ~ U[0,1)` row-major from a generator seeded with `seed` and
/// keeps entry `(i, j)` iff `u[i][j] >= t`.
pub fn make_mask(rows: usize, cols: usize, t: f64, mode: MaskMode, seed: u64) -> Result<MaskMatrix> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("threshold t must lie in [0, 1], got {t}")));
    }
    let u = Rng::new(seed).uniform_matrix(rows, cols);
    let keep = u.map(|x| if x >= t { 1.0 } else { 0.0 });
    Ok(MaskMatrix { keep, threshold: t, mode, seed })
}

impl MaskMatrix {
    pub fn shape(&self) -> (usize, usize) {
        self.keep.shape()
    }

    pub fn frozen_count(&self) -> usize {
        self.keep.as_slice().iter().filter(|&&k| k == 0.0).count()
    }

    /// Realized fraction of masked entries.
    pub fn frozen_fraction(&self) -> f64 {
        self.frozen_count() as f64 / self.keep.len() as f64
    }

    #[inline]
    pub fn is_frozen(&self, i: usize, j: usize) -> bool {
        self.keep[(i, j)] == 0.0
    }
}

/// `grad_W (.) keep`. Frozen entries come out as exactly `+0.0`; kept
/// entries are copied through untouched.
pub fn apply_mask_to_grad(grad_w: &Matrix, mask: &MaskMatrix) -> Result<Matrix> {
    grad_w.check_same_shape(&mask.keep, "apply_mask_to_grad")?;
    let data = grad_w
        .as_slice()
        .iter()
        .zip(mask.keep.as_slice())
        .map(|(&g, &k)| if k == 0.0 { 0.0 } else { g })
        .collect();
    Matrix::from_vec(grad_w.rows(), grad_w.cols(), data)
}
