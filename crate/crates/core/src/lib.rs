//! Learning-to-impute (L2I) for small dense networks.
//!
//! The crate is `no_std` with `alloc`. It contains everything that is pure
//! computation: dense matrices and a portable PRNG ([`ndcore`]), MLPs with
//! hand-written reverse-mode gradients and forward-over-reverse second-order
//! products ([`netgrad`]), label imputers and consistency losses
//! ([`impute`]), the bilevel trainer and its hypergradients ([`meta`]),
//! closed-form one-layer references and finite differences ([`oracle`]),
//! toy datasets ([`datagen`]) and experiment orchestration ([`harness`]).
//!
//! File formats and the command line live in the `l2i` companion crate.

#![no_std]
// `!(x > 0.0)` is how NaN gets rejected; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod datagen;
mod error;
pub mod harness;
pub mod impute;
pub mod meta;
pub mod ndcore;
pub mod netgrad;
pub mod oracle;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use ndcore::{Matrix, RngState};
pub use netgrad::{Activation, LossKind, Mlp, ParamVector, Tangent, Task};
