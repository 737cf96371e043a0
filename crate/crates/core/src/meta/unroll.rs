use alloc::vec::Vec;

use crate::impute::{imputer_vjp, ImputedBatch, Imputer};
use crate::netgrad::{self, sgd_step, LossKind, Mlp, ParamVector, Tangent, Task};
use crate::{Error, Matrix, Result};

/// Data and schedule of the inner objective `C^T(θ) + λ C^U(θ, z)`; the
/// labels `z` are passed separately.
#[derive(Debug, Clone, Copy)]
pub struct InnerProblem<'a> {
    pub train_x: &'a Matrix,
    pub train_y: &'a Matrix,
    /// Transformed unlabeled inputs the student is evaluated on.
    pub unlabeled: &'a Matrix,
    pub supervised: LossKind,
    pub d: LossKind,
    pub lambda: f64,
    pub eta: f64,
    pub steps: usize,
}

/// Parameters visited by the inner loop, kept for the reverse replay.
#[derive(Debug, Clone)]
pub struct UnrollTape<'a> {
    pub problem: InnerProblem<'a>,
    pub z: Matrix,
    /// `θ_0 = θ̂, …, θ_{K-1}`.
    pub params: Vec<ParamVector>,
    /// `θ_K = θ*`.
    pub theta_star: ParamVector,
}

impl UnrollTape<'_> {
    pub fn theta_hat(&self) -> &ParamVector {
        &self.params[0]
    }
}

/// Value and `θ`-gradient of the inner objective.
pub fn inner_objective(model: &Mlp, params: &ParamVector, z: &Matrix, p: &InnerProblem) -> Result<(f64, ParamVector)> {
    let t = netgrad::loss_and_grads(model, params, p.train_x, p.train_y, p.supervised)?;
    let u = netgrad::loss_and_grads(model, params, p.unlabeled, z, p.d)?;
    let g = t.grad_params.axpy(p.lambda, &u.grad_params)?;
    Ok((t.loss + p.lambda * u.loss, g))
}

/// `steps` plain SGD steps on the inner objective with `z` held fixed.
pub fn inner_loop<'a>(
    model: &Mlp,
    params: &ParamVector,
    z: &Matrix,
    p: InnerProblem<'a>,
) -> Result<(ParamVector, UnrollTape<'a>)> {
    if p.steps == 0 {
        return Err(Error::invalid("inner_steps", "must be at least 1"));
    }
    if !(p.eta >= 0.0) {
        return Err(Error::invalid("eta_theta", "must be non-negative"));
    }
    if z.rows() != p.unlabeled.rows() {
        return Err(Error::length("imputed labels", p.unlabeled.rows(), z.rows()));
    }
    let mut visited = Vec::with_capacity(p.steps);
    let mut theta = params.clone();
    for _ in 0..p.steps {
        let (_, g) = inner_objective(model, &theta, z, &p)?;
        if !g.is_finite() {
            return Err(Error::NonFinite("inner-loop gradient"));
        }
        let next = if p.eta == 0.0 { theta.clone() } else { sgd_step(&theta, &g, p.eta)? };
        visited.push(core::mem::replace(&mut theta, next));
    }
    let tape = UnrollTape { problem: p, z: z.clone(), params: visited, theta_star: theta.clone() };
    Ok((theta, tape))
}

/// Labeled batch the outer objective `C^H` is measured on.
#[derive(Debug, Clone, Copy)]
pub struct Holdout<'a> {
    pub x: &'a Matrix,
    pub y: &'a Matrix,
    pub loss: LossKind,
}

impl Holdout<'_> {
    pub fn loss_at(&self, model: &Mlp, params: &ParamVector) -> Result<f64> {
        Ok(netgrad::loss_and_grads(model, params, self.x, self.y, self.loss)?.loss)
    }
}

/// Hypergradient with respect to the imputed labels, with `C^H(θ*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrad {
    pub grad_z: Matrix,
    pub c_holdout: f64,
}

/// `∂C^H(θ*)/∂z` through every inner step, `θ̂` held constant.
///
/// Reverse replay: with `a = ∇C^H(θ_K)`, each step `k` (last to first)
/// contributes `-η λ (∂²C^U/∂z∂θ)ᵀ a` at `θ_k`, then `a ← (I - η H_k) a`.
pub fn meta_grad_exact_l(model: &Mlp, tape: &UnrollTape, holdout: &Holdout) -> Result<LabelGrad> {
    let p = &tape.problem;
    let h = netgrad::loss_and_grads(model, &tape.theta_star, holdout.x, holdout.y, holdout.loss)?;
    let mut grad_z = Matrix::zeros(tape.z.rows(), tape.z.cols());
    if p.eta == 0.0 || p.lambda == 0.0 || tape.z.rows() == 0 {
        return Ok(LabelGrad { grad_z, c_holdout: h.loss });
    }
    let mut a = h.grad_params.into_values();
    for k in (0..tape.params.len()).rev() {
        let theta = &tape.params[k];
        let v = Tangent(a.clone());
        let u = netgrad::second_order(model, theta, p.unlabeled, &tape.z, p.d, &v)?;
        grad_z = grad_z.sub(&u.mixed.scale(p.eta * p.lambda))?;
        if k > 0 {
            let t = netgrad::hvp(model, theta, p.train_x, p.train_y, p.supervised, &v)?;
            for ((ai, ti), ui) in a.iter_mut().zip(t.values()).zip(u.hvp.values()) {
                *ai -= p.eta * (ti + p.lambda * ui);
            }
        }
    }
    if !grad_z.is_finite() {
        return Err(Error::NonFinite("label hypergradient"));
    }
    Ok(LabelGrad { grad_z, c_holdout: h.loss })
}

/// Pulls a label hypergradient back to the parameters that imputed `z`:
/// `(∂z/∂θ̂)ᵀ ∂C^H/∂z`, the only path through which `θ̂` reaches `θ*` besides
/// the inner-loop start point.
pub fn meta_grad_exact_o(
    model: &Mlp,
    tape: &UnrollTape,
    holdout: &Holdout,
    imputer: &Imputer,
    batch: &ImputedBatch,
) -> Result<(ParamVector, LabelGrad)> {
    let lg = meta_grad_exact_l(model, tape, holdout)?;
    let g = label_grad_to_params(model, tape.theta_hat(), imputer, batch, &lg.grad_z)?;
    Ok((g, lg))
}

pub(crate) fn label_grad_to_params(
    model: &Mlp,
    theta_hat: &ParamVector,
    imputer: &Imputer,
    batch: &ImputedBatch,
    grad_z: &Matrix,
) -> Result<ParamVector> {
    if batch.inputs.rows() == 0 {
        return Ok(ParamVector::zeros_like(theta_hat));
    }
    imputer_vjp(imputer, model, theta_hat, batch, grad_z)
}

/// Last-layer approximation of `∂C^H/∂z`.
///
/// Only the head parameters are differentiated, with the encoder frozen.
/// For unlabeled row `j` this gives `-η λ (∂δ^u_j/∂z_j)ᵀ Σ_i δ_i s(i, j)`, where
/// `δ` are output gradients of the mean losses and `s(i, j)` is the dot
/// product of the hold-out features at `θ*` with the unlabeled features at
/// `θ̂` (plus one for a head bias). Exact when the encoder is the identity
/// and there is one inner step.
pub fn meta_grad_approx(model: &Mlp, tape: &UnrollTape, holdout: &Holdout) -> Result<LabelGrad> {
    let p = &tape.problem;
    let theta_now = tape.theta_hat();
    let (c_holdout, delta) = netgrad::output_grads(model, &tape.theta_star, holdout.x, holdout.y, holdout.loss)?;
    let (nu, k) = (tape.z.rows(), tape.z.cols());
    let mut grad_z = Matrix::zeros(nu, k);
    if p.eta == 0.0 || p.lambda == 0.0 || nu == 0 {
        return Ok(LabelGrad { grad_z, c_holdout });
    }
    let f_hold = netgrad::features(model, &tape.theta_star, holdout.x)?;
    let f_unl = netgrad::features(model, theta_now, p.unlabeled)?;
    let probs = netgrad::predict(model, theta_now, p.unlabeled)?;
    let bias = if model.head().bias { 1.0 } else { 0.0 };
    // s_j = Σ_i δ_i sim(i, j), one row per unlabeled sample
    let mut s = Matrix::zeros(nu, k);
    for j in 0..nu {
        for i in 0..holdout.x.rows() {
            let sim: f64 = f_hold.row(i).iter().zip(f_unl.row(j)).map(|(a, b)| a * b).sum::<f64>() + bias;
            for (sc, &dc) in s.row_mut(j).iter_mut().zip(delta.row(i)) {
                *sc += dc * sim;
            }
        }
    }
    let coef = p.eta * p.lambda / nu as f64;
    match p.d {
        LossKind::CrossEntropySoftmax => {
            for j in 0..nu {
                let ps: f64 = probs.row(j).iter().zip(s.row(j)).map(|(a, b)| a * b).sum();
                for c in 0..k {
                    grad_z.set(j, c, -coef * (ps - s.get(j, c)));
                }
            }
        }
        LossKind::BinaryCrossEntropySigmoid => grad_z = s.scale(coef),
        LossKind::MeanSquaredError => {
            let js = match model.task() {
                Task::Regression { .. } => s,
                task => netgrad::predict_vjp(task, &probs, &s)?,
            };
            grad_z = js.scale(2.0 * coef);
        }
    }
    if !grad_z.is_finite() {
        return Err(Error::NonFinite("approximate label hypergradient"));
    }
    Ok(LabelGrad { grad_z, c_holdout })
}
