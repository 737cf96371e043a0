use super::{ImputedBatch, Transform};
use crate::netgrad::{self, LossGrads, LossKind, Mlp, ParamVector};
use crate::{Error, Matrix, Result, RngState};

/// Unsupervised term `ℓ^u(x^u, z) = d(Φ_θ(T_η(x^u)), z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyLoss {
    pub d: LossKind,
    /// Perturbation applied to `x^u` before the student sees it.
    pub transform: Transform,
}

impl ConsistencyLoss {
    pub fn new(d: LossKind, transform: Transform) -> Self {
        Self { d, transform }
    }

    pub fn validate(&self, model: &Mlp) -> Result<()> {
        self.d.check(model.task())?;
        self.transform.validate()
    }

    /// Draws `T_η(x^u)`.
    pub fn perturb(&self, x_u: &Matrix, rng: &mut RngState) -> Result<Matrix> {
        Ok(self.transform.apply(x_u, rng)?.output)
    }
}

/// Gradients of the consistency term on a fixed, already transformed input.
pub fn consistency_on(model: &Mlp, params: &ParamVector, input: &Matrix, z: &Matrix, d: LossKind) -> Result<LossGrads> {
    if input.rows() != z.rows() {
        return Err(Error::length("consistency rows", input.rows(), z.rows()));
    }
    netgrad::loss_and_grads(model, params, input, z, d)
}

/// Mean consistency loss over the batch with a fresh draw of the transform.
/// `grad_targets` of the result is the gradient with respect to `z`.
pub fn consistency_loss(
    model: &Mlp,
    params: &ParamVector,
    batch: &ImputedBatch,
    loss: &ConsistencyLoss,
    rng: &mut RngState,
) -> Result<LossGrads> {
    loss.validate(model)?;
    let input = loss.perturb(&batch.inputs, rng)?;
    consistency_on(model, params, &input, &batch.labels, loss.d)
}
