//! Dense matrices, the seeded generator, and symmetric eigen routines.

mod eig;
mod matrix;
mod rng;

pub use eig::{sym_eig, sym_inv_sqrt, SymEig, DEFAULT_EIG_FLOOR};
pub use matrix::{matmul, Matrix};
pub use rng::{derive_seed, splitmix64, Rng};
