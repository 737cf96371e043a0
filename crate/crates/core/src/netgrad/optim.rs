use alloc::vec;
use alloc::vec::Vec;

use super::ParamVector;
use crate::{Error, Result};

/// `params - eta * grads`.
pub fn sgd_step(params: &ParamVector, grads: &ParamVector, eta: f64) -> Result<ParamVector> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", "learning rate must be positive"));
    }
    params.axpy(-eta, grads)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::invalid("lr", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("beta", "betas must lie in [0, 1)"));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::invalid("eps", "must be non-negative"));
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(
    state: &AdamState,
    params: &ParamVector,
    grads: &ParamVector,
    hyper: &AdamHyper,
) -> Result<(ParamVector, AdamState)> {
    let n = params.len();
    grads.check_len("adam_step (grads)", n)?;
    if state.m.len() != n || state.v.len() != n {
        return Err(Error::length("adam_step (state)", n, state.m.len()));
    }
    let t = state.t + 1;
    let bc1 = 1.0 - libm::pow(hyper.beta1, t as f64);
    let bc2 = 1.0 - libm::pow(hyper.beta2, t as f64);
    let mut m = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let g = grads.values()[i];
        let mi = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        let vi = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        let mhat = mi / bc1;
        let vhat = vi / bc2;
        out.push(params.values()[i] - hyper.lr * mhat / (libm::sqrt(vhat) + hyper.eps));
        m.push(mi);
        v.push(vi);
    }
    Ok((params.with_values(out)?, AdamState { m, v, t }))
}

/// `alpha * teacher + (1 - alpha) * student`.
pub fn ema_update(teacher: &ParamVector, student: &ParamVector, alpha: f64) -> Result<ParamVector> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("alpha", "must lie in [0, 1]"));
    }
    teacher.check_len("ema_update", student.len())?;
    let vals = teacher.values().iter().zip(student.values()).map(|(&t, &s)| alpha * t + (1.0 - alpha) * s).collect();
    teacher.with_values(vals)
}
