//! Deterministic CPU training with weight-freezing dense classifiers.

pub mod data;
pub mod error;
pub mod experiment;
pub mod layers;
pub mod loss;
pub mod optim;
pub mod preprocess;
pub mod tensor;

pub use error::{Error, Result};
