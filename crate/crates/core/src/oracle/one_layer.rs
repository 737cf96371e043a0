//! Closed-form hypergradients for `Φ_θ(x) = σ(θᵀx)` (binary) and
//! `Φ_θ(x) = θᵀx` (regression) with one unlabeled sample and one inner SGD step.
//!
//! Setting, for binary classification:
//!
//! ```text
//! z   = σ(θᵀ(x_u + η))                                   imputed label
//! θ*  = θ - η_θ (w_T Σ_T (σ(θᵀx) - y) x + λ (σ(θᵀx_u) - z) x_u)
//! C^H = w_H Σ_H BCE(σ(θ*ᵀx), y)
//! ∂C^H/∂z           = λ η_θ w_H Σ_H (σ(θ*ᵀx) - y) xᵀx_u
//! ∂C^H/∂z · ∂z/∂θ   = ∂C^H/∂z · σ'(θᵀ(x_u + η)) (x_u + η)
//! ```
//!
//! and for regression with squared error `‖θᵀx - y‖²`:
//!
//! ```text
//! z   = θᵀ(x_u + η)
//! θ*  = θ - 2η_θ (w_T Σ_T (θᵀx - y) x + λ (θᵀx_u - z) x_u)
//! ∂C^H/∂z           = 4 λ η_θ w_H Σ_H (θ*ᵀx - y) xᵀx_u
//! ∂C^H/∂z · ∂z/∂θ   = ∂C^H/∂z · (x_u + η)
//! ```
//!
//! `w_T = w_H = 1` for [`Reduction::Sum`]; `1/|T|` and `1/|H|` for
//! [`Reduction::Mean`], which is the convention the library's batch losses use.
//! The `θ` inside the inner step is held fixed: only the path through `z`
//! is differentiated.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneLayerInstance {
    pub theta: Vec<f64>,
    pub train: Vec<(Vec<f64>, f64)>,
    pub holdout: Vec<(Vec<f64>, f64)>,
    pub x_u: Vec<f64>,
    /// Fixed perturbation applied to `x_u` before imputing.
    pub eta_perturb: Vec<f64>,
    pub eta_theta: f64,
    /// Weight of the unlabeled term in the inner step.
    pub lambda: f64,
    pub reduction: Reduction,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + libm::exp(-s))
    } else {
        let e = libm::exp(s);
        e / (1.0 + e)
    }
}

impl OneLayerInstance {
    fn train_weight(&self) -> f64 {
        match self.reduction {
            Reduction::Sum => 1.0,
            Reduction::Mean => 1.0 / self.train.len().max(1) as f64,
        }
    }

    fn holdout_weight(&self) -> f64 {
        match self.reduction {
            Reduction::Sum => 1.0,
            Reduction::Mean => 1.0 / self.holdout.len().max(1) as f64,
        }
    }

    fn perturbed(&self) -> Vec<f64> {
        self.x_u.iter().zip(&self.eta_perturb).map(|(a, b)| a + b).collect()
    }

    /// `xᵀ x_u` weighted residual sum over the hold-out set.
    fn similarity_sum(&self, theta_star: &[f64], residual: impl Fn(f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (x, y) in &self.holdout {
            acc += residual(dot(theta_star, x), *y) * dot(x, &self.x_u);
        }
        acc
    }
}

/// `σ(φᵀ(x_u + η))` for imputing parameters `phi`.
pub fn imputed_label_binary(inst: &OneLayerInstance, phi: &[f64]) -> f64 {
    sigmoid(dot(phi, &inst.perturbed()))
}

pub fn theta_star_binary(inst: &OneLayerInstance, z: f64) -> Vec<f64> {
    let wt = inst.train_weight();
    let mut g = alloc::vec![0.0; inst.theta.len()];
    for (x, y) in &inst.train {
        let r = sigmoid(dot(&inst.theta, x)) - y;
        for i in 0..g.len() {
            g[i] += wt * r * x[i];
        }
    }
    let ru = sigmoid(dot(&inst.theta, &inst.x_u)) - z;
    for i in 0..g.len() {
        g[i] += inst.lambda * ru * inst.x_u[i];
        g[i] = inst.theta[i] - inst.eta_theta * g[i];
    }
    g
}

/// Hold-out cross-entropy of `θ*(z)`.
pub fn holdout_loss_binary(inst: &OneLayerInstance, z: f64) -> f64 {
    let ts = theta_star_binary(inst, z);
    let wh = inst.holdout_weight();
    let mut acc = 0.0;
    for (x, y) in &inst.holdout {
        let s = dot(&ts, x);
        // softplus(s) - y s
        let sp = if s > 0.0 { s + libm::log1p(libm::exp(-s)) } else { libm::log1p(libm::exp(s)) };
        acc += wh * (sp - y * s);
    }
    acc
}

pub fn analytic_grad_z_binary(inst: &OneLayerInstance) -> f64 {
    let z = imputed_label_binary(inst, &inst.theta);
    let ts = theta_star_binary(inst, z);
    inst.lambda * inst.eta_theta * inst.holdout_weight() * inst.similarity_sum(&ts, |s, y| sigmoid(s) - y)
}

pub fn analytic_grad_theta_binary(inst: &OneLayerInstance) -> Vec<f64> {
    let gz = analytic_grad_z_binary(inst);
    let xp = inst.perturbed();
    let s = sigmoid(dot(&inst.theta, &xp));
    let d = s * (1.0 - s);
    xp.iter().map(|v| gz * d * v).collect()
}

/// `φᵀ(x_u + η)`.
pub fn imputed_label_regression(inst: &OneLayerInstance, phi: &[f64]) -> f64 {
    dot(phi, &inst.perturbed())
}

pub fn theta_star_regression(inst: &OneLayerInstance, z: f64) -> Vec<f64> {
    let wt = inst.train_weight();
    let mut g = alloc::vec![0.0; inst.theta.len()];
    for (x, y) in &inst.train {
        let r = dot(&inst.theta, x) - y;
        for i in 0..g.len() {
            g[i] += wt * r * x[i];
        }
    }
    let ru = dot(&inst.theta, &inst.x_u) - z;
    for i in 0..g.len() {
        g[i] += inst.lambda * ru * inst.x_u[i];
        g[i] = inst.theta[i] - 2.0 * inst.eta_theta * g[i];
    }
    g
}

pub fn holdout_loss_regression(inst: &OneLayerInstance, z: f64) -> f64 {
    let ts = theta_star_regression(inst, z);
    let wh = inst.holdout_weight();
    inst.holdout
        .iter()
        .map(|(x, y)| {
            let r = dot(&ts, x) - y;
            wh * r * r
        })
        .sum()
}

pub fn analytic_grad_z_regression(inst: &OneLayerInstance) -> f64 {
    let z = imputed_label_regression(inst, &inst.theta);
    let ts = theta_star_regression(inst, z);
    4.0 * inst.lambda * inst.eta_theta * inst.holdout_weight() * inst.similarity_sum(&ts, |s, y| s - y)
}

pub fn analytic_grad_theta_regression(inst: &OneLayerInstance) -> Vec<f64> {
    let gz = analytic_grad_z_regression(inst);
    inst.perturbed().iter().map(|v| gz * v).collect()
}
