//! Layers with hand-written forward and backward passes.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod frozen;
pub mod mask;
pub mod model;
pub mod pool;

pub use activation::{activation_backward, activation_forward, ActivationKind};
pub use conv::{conv1d_backward, conv1d_forward, Conv1d, Conv1dGrads};
pub use dense::{dense_backward, dense_forward, Dense, DenseGrads};
pub use dropout::{dropout_forward, DropoutLayer};
pub use frozen::FrozenDense;
pub use mask::{apply_mask_to_grad, make_mask, MaskMatrix, MaskMode};
pub use model::{Batch, ClassifierMode, ClassifierSpec, Layer, LayerSpec, Model, ParamMut};
pub use pool::{mean_pool_backward, mean_pool_forward};
