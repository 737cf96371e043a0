//! Dense row-major matrices and the seeded random stream used everywhere else.

mod matrix;
mod rng;

pub use matrix::{matmul, Matrix};
pub use rng::{sample_gaussian, RngState};
