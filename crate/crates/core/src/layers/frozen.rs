use super::dense::Dense;
use super::mask::{apply_mask_to_grad, MaskMatrix, MaskMode};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Fully connected layer whose weight updates are gated by a fixed
/// [`MaskMatrix`]. The bias is never masked.
///
/// In [`MaskMode::Frozen`] the forward pass is exactly that of a plain
/// [`Dense`] layer and masked weights stay at their construction values.
/// In [`MaskMode::Sparse`] masked weights are zeroed at construction and must
/// remain zero.
#[derive(Debug, Clone)]
pub struct FrozenDense {
    pub dense: Dense,
    pub mask: MaskMatrix,
    /// Weight at construction, after sparsification in sparse mode.
    pub frozen_snapshot: Matrix,
}

impl FrozenDense {
    pub fn new(dense: Dense, mask: MaskMatrix) -> Result<Self> {
        if mask.shape() != dense.weight.shape() {
            return Err(Error::shape(format!(
                "mask {:?} does not match weight {:?}",
                mask.shape(),
                dense.weight.shape()
            )));
        }
        let mut layer = Self { frozen_snapshot: dense.weight.clone(), dense, mask };
        if layer.mask.mode == MaskMode::Sparse {
            layer.sparsify_weights()?;
            layer.frozen_snapshot = layer.dense.weight.clone();
        }
        Ok(layer)
    }

    /// Zeroes every masked weight. Only meaningful in sparse mode.
    pub fn sparsify_weights(&mut self) -> Result<()> {
        if self.mask.mode != MaskMode::Sparse {
            return Err(Error::Mode("sparsify_weights requires a sparse-mode mask".into()));
        }
        for (w, &k) in self.dense.weight.as_mut_slice().iter_mut().zip(self.mask.keep.as_slice()) {
            if k == 0.0 {
                *w = 0.0;
            }
        }
        Ok(())
    }

    pub fn forward(&mut self, x: Matrix, training: bool) -> Result<Matrix> {
        self.dense.forward(x, training)
    }

    pub fn backward(&mut self, grad_y: &Matrix) -> Result<Matrix> {
        let g = self.dense.backward_raw(grad_y)?;
        self.dense.grad_weight = apply_mask_to_grad(&g.grad_w, &self.mask)?;
        self.dense.grad_bias = Matrix::from_vec(1, g.grad_b.len(), g.grad_b)?;
        Ok(g.grad_x)
    }

    /// Checks the mask contract against the current weights: frozen entries
    /// bit-equal to the snapshot, sparse entries exactly zero.
    pub fn verify(&self) -> Result<()> {
        let w = self.dense.weight.as_slice();
        let snap = self.frozen_snapshot.as_slice();
        for (idx, &k) in self.mask.keep.as_slice().iter().enumerate() {
            if k != 0.0 {
                continue;
            }
            let ok = match self.mask.mode {
                MaskMode::Frozen => w[idx].to_bits() == snap[idx].to_bits(),
                MaskMode::Sparse => w[idx] == 0.0,
            };
            if !ok {
                let cols = self.dense.weight.cols();
                return Err(Error::Invariant(format!(
                    "{:?} weight ({}, {}) changed to {}",
                    self.mask.mode,
                    idx / cols,
                    idx % cols,
                    w[idx]
                )));
            }
        }
        Ok(())
    }
}
