//! Numeric substrate shared by every other module.

mod gradcheck;
pub mod rng;
mod vector;

pub use gradcheck::grad_check;
pub use rng::RngStream;
pub use vector::{axpy, dot, mean_dense, sq_norm, DenseVector, SparseVector};
