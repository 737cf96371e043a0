//! Small MLPs with hand-written reverse-mode gradients.
//!
//! Second-order products are computed forward-over-reverse: the backward
//! pass is run over [`Dual`] numbers whose tangent is a parameter direction
//! `v`, so the tangent of the parameter gradient is `H v` and the tangent of
//! the target gradient is the mixed product `(∂²L/∂z∂θ) v`. No Hessian is
//! ever materialised.

mod backprop;
pub(crate) mod loss;
mod model;
mod optim;
mod params;
mod scalar;

use alloc::vec::Vec;

pub use loss::LossKind;
pub use model::{Activation, Layer, Mlp, Task};
pub use optim::{adam_step, ema_update, sgd_step, AdamHyper, AdamState};
pub use params::{ParamVector, Tangent};
pub use scalar::{Dual, Scalar};

pub(crate) use backprop::{backward, batch_loss, forward_cached};

use crate::{Error, Matrix, Result};

fn check_inputs(model: &Mlp, params: &ParamVector, inputs: &Matrix) -> Result<()> {
    model.check_params(params.len())?;
    if inputs.cols() != model.input_dim() && inputs.rows() > 0 {
        return Err(Error::Shape {
            op: "forward",
            left: inputs.shape(),
            right: (model.input_dim(), model.feature_dim()),
        });
    }
    Ok(())
}

fn check_targets(model: &Mlp, inputs: &Matrix, targets: &Matrix, loss: LossKind) -> Result<()> {
    loss.check(model.task())?;
    if targets.rows() != inputs.rows() || (targets.rows() > 0 && targets.cols() != model.output_dim()) {
        return Err(Error::Shape { op: "targets", left: targets.shape(), right: (inputs.rows(), model.output_dim()) });
    }
    Ok(())
}

/// Raw outputs (logits for classification, values for regression), one row per input.
pub fn forward(model: &Mlp, params: &ParamVector, inputs: &Matrix) -> Result<Matrix> {
    check_inputs(model, params, inputs)?;
    let cache = forward_cached::<f64>(model, params.values(), inputs);
    Matrix::from_vec(inputs.rows(), model.output_dim(), cache.outputs().to_vec())
}

/// Outputs passed through the task's prediction map: softmax rows, sigmoid
/// probabilities of class 1, or raw regression values.
pub fn predict(model: &Mlp, params: &ParamVector, inputs: &Matrix) -> Result<Matrix> {
    let mut out = forward(model, params, inputs)?;
    let k = out.cols();
    if k > 0 {
        for row in out.data_mut().chunks_exact_mut(k) {
            loss::link_in_place(model.task(), row);
        }
    }
    Ok(out)
}

/// Encoder output (the head's input), one row per input.
pub fn features(model: &Mlp, params: &ParamVector, inputs: &Matrix) -> Result<Matrix> {
    check_inputs(model, params, inputs)?;
    let cache = forward_cached::<f64>(model, params.values(), inputs);
    Matrix::from_vec(inputs.rows(), model.feature_dim(), cache.features().to_vec())
}

/// Mean batch loss with gradients for the parameters and for the targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrads {
    pub loss: f64,
    pub grad_params: ParamVector,
    pub grad_targets: Matrix,
}

pub fn loss_and_grads(
    model: &Mlp,
    params: &ParamVector,
    inputs: &Matrix,
    targets: &Matrix,
    loss: LossKind,
) -> Result<LossGrads> {
    check_inputs(model, params, inputs)?;
    check_targets(model, inputs, targets, loss)?;
    let b = batch_loss::<f64>(model, params.values(), inputs, targets.data(), loss);
    if !b.loss.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok(LossGrads {
        loss: b.loss,
        grad_params: params.with_values(b.grad_params)?,
        grad_targets: Matrix::from_vec(targets.rows(), targets.cols(), b.grad_targets)?,
    })
}

/// Mean batch loss and its gradient with respect to the raw outputs, one row per input.
pub fn output_grads(
    model: &Mlp,
    params: &ParamVector,
    inputs: &Matrix,
    targets: &Matrix,
    loss: LossKind,
) -> Result<(f64, Matrix)> {
    let out = forward(model, params, inputs)?;
    check_targets(model, inputs, targets, loss)?;
    let (n, k) = out.shape();
    let mut d_out = Matrix::zeros(n, k);
    if n == 0 {
        return Ok((0.0, d_out));
    }
    let mut d_z = alloc::vec![0.0; k];
    let mut scratch = alloc::vec![0.0; k];
    let mut total = 0.0;
    for r in 0..n {
        total +=
            loss::row_loss(loss, model.task(), out.row(r), targets.row(r), d_out.row_mut(r), &mut d_z, &mut scratch);
    }
    let inv = 1.0 / n as f64;
    d_out.data_mut().iter_mut().for_each(|v| *v *= inv);
    let mean = total * inv;
    if !mean.is_finite() {
        return Err(Error::NonFinite("loss"));
    }
    Ok((mean, d_out))
}

/// Hessian-vector product and mixed product from a single dual pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrder {
    /// `(∂²L/∂θ²) v`
    pub hvp: ParamVector,
    /// `(∂²L/∂z∂θ) v`, shaped like the targets.
    pub mixed: Matrix,
}

pub fn second_order(
    model: &Mlp,
    params: &ParamVector,
    inputs: &Matrix,
    targets: &Matrix,
    loss: LossKind,
    v: &Tangent,
) -> Result<SecondOrder> {
    check_inputs(model, params, inputs)?;
    check_targets(model, inputs, targets, loss)?;
    if v.len() != params.len() {
        return Err(Error::length("tangent", params.len(), v.len()));
    }
    let dual_params: Vec<Dual> = params.values().iter().zip(&v.0).map(|(&p, &d)| Dual::new(p, d)).collect();
    let dual_targets: Vec<Dual> = targets.data().iter().map(|&z| Dual::from_f64(z)).collect();
    let b = batch_loss::<Dual>(model, &dual_params, inputs, &dual_targets, loss);
    let hvp = params.with_values(b.grad_params.iter().map(|d| d.eps).collect())?;
    let mixed = Matrix::from_vec(targets.rows(), targets.cols(), b.grad_targets.iter().map(|d| d.eps).collect())?;
    if !hvp.is_finite() || !mixed.is_finite() {
        return Err(Error::NonFinite("second-order product"));
    }
    Ok(SecondOrder { hvp, mixed })
}

/// `(∂²L/∂θ²) v` for the mean batch loss.
pub fn hvp(
    model: &Mlp,
    params: &ParamVector,
    inputs: &Matrix,
    targets: &Matrix,
    loss: LossKind,
    v: &Tangent,
) -> Result<ParamVector> {
    Ok(second_order(model, params, inputs, targets, loss, v)?.hvp)
}

/// `(∂²L/∂z∂θ) v`: derivative with respect to the targets of `vᵀ ∇_θ L`.
pub fn mixed_hvp(
    model: &Mlp,
    params: &ParamVector,
    inputs: &Matrix,
    targets: &Matrix,
    loss: LossKind,
    v: &Tangent,
) -> Result<Matrix> {
    Ok(second_order(model, params, inputs, targets, loss, v)?.mixed)
}

/// Gradient of `Σ d_out ⊙ forward(inputs)` with respect to the parameters.
pub fn output_vjp(model: &Mlp, params: &ParamVector, inputs: &Matrix, d_out: &Matrix) -> Result<ParamVector> {
    check_inputs(model, params, inputs)?;
    if d_out.rows() != inputs.rows() || (d_out.rows() > 0 && d_out.cols() != model.output_dim()) {
        return Err(Error::Shape { op: "output_vjp", left: d_out.shape(), right: (inputs.rows(), model.output_dim()) });
    }
    if inputs.rows() == 0 {
        return Ok(ParamVector::zeros_like(params));
    }
    let cache = forward_cached::<f64>(model, params.values(), inputs);
    params.with_values(backward(model, params.values(), &cache, d_out.data()))
}

/// `Jᵀ g` of the prediction map, row by row, given probabilities from [`predict`].
pub fn predict_vjp(task: Task, probs: &Matrix, g: &Matrix) -> Result<Matrix> {
    if probs.shape() != g.shape() {
        return Err(Error::Shape { op: "predict_vjp", left: probs.shape(), right: g.shape() });
    }
    let mut out = Matrix::zeros(g.rows(), g.cols());
    for r in 0..g.rows() {
        loss::link_vjp(task, probs.row(r), g.row(r), out.row_mut(r));
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
