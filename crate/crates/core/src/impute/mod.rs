//! Imputing functions `ψ`, the random input perturbations they see, and the
//! consistency losses that tie the student to the imputed labels.

mod consistency;
mod imputer;
mod transform;

pub use consistency::{consistency_loss, consistency_on, ConsistencyLoss};
pub use imputer::{impute, impute_passes, imputer_vjp, one_hot_argmax, sharpen, ImputedBatch, Imputer, ImputerKind};
pub use transform::{Applied, Transform};
