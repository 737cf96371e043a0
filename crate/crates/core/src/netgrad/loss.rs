use alloc::format;

use super::{Scalar, Task};
use crate::{Error, Result};

/// Per-sample loss between a raw network output and a target row.
///
/// * `CrossEntropySoftmax`: `-Σ_k z_k log softmax(o)_k` (classification).
/// * `BinaryCrossEntropySigmoid`: `-[z log σ(o) + (1-z) log(1-σ(o))]` (binary).
/// * `MeanSquaredError`: `‖link(o) - z‖²`, where `link` is the task's
///   prediction map (softmax, sigmoid, or identity). For classification
///   this is the squared distance between probability vectors.
///
/// Batch losses are means over rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropySoftmax,
    BinaryCrossEntropySigmoid,
    MeanSquaredError,
}

impl LossKind {
    /// The supervised loss for a task.
    pub fn supervised_for(task: Task) -> LossKind {
        match task {
            Task::Binary => LossKind::BinaryCrossEntropySigmoid,
            Task::Classification { .. } => LossKind::CrossEntropySoftmax,
            Task::Regression { .. } => LossKind::MeanSquaredError,
        }
    }

    /// Whether this loss can be evaluated against the task's outputs at all.
    pub fn check(self, task: Task) -> Result<()> {
        let ok = match self {
            LossKind::CrossEntropySoftmax => matches!(task, Task::Classification { .. }),
            LossKind::BinaryCrossEntropySigmoid => matches!(task, Task::Binary),
            LossKind::MeanSquaredError => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::LossTask { loss: self.name(), task: format!("{task}") })
        }
    }

    /// Stricter rule for the supervised term: classification pairs with a
    /// cross-entropy, regression with squared error.
    pub fn check_supervised(self, task: Task) -> Result<()> {
        if self == LossKind::supervised_for(task) {
            Ok(())
        } else {
            Err(Error::LossTask { loss: self.name(), task: format!("{task} (supervised)") })
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::CrossEntropySoftmax => "cross_entropy_softmax",
            LossKind::BinaryCrossEntropySigmoid => "binary_cross_entropy_sigmoid",
            LossKind::MeanSquaredError => "mean_squared_error",
        }
    }
}

impl core::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" | "cross_entropy" | "cross_entropy_softmax" => Ok(LossKind::CrossEntropySoftmax),
            "bce" | "binary_cross_entropy" | "binary_cross_entropy_sigmoid" => Ok(LossKind::BinaryCrossEntropySigmoid),
            "mse" | "mean_squared_error" => Ok(LossKind::MeanSquaredError),
            other => Err(Error::invalid("loss", format!("unknown loss `{other}`"))),
        }
    }
}

/// Applies the task's prediction map to one output row, in place.
pub(crate) fn link_in_place<S: Scalar>(task: Task, row: &mut [S]) {
    match task {
        Task::Binary => row[0] = row[0].sigmoid(),
        Task::Classification { .. } => softmax_in_place(row),
        Task::Regression { .. } => {}
    }
}

fn softmax_in_place<S: Scalar>(row: &mut [S]) {
    let mut m = row[0];
    for &v in row.iter() {
        if v.re() > m.re() {
            m = v;
        }
    }
    let mut sum = S::zero();
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

/// `Jᵀ g` for the prediction map at probabilities `p`, written into `out`.
pub(crate) fn link_vjp<S: Scalar>(task: Task, p: &[S], g: &[S], out: &mut [S]) {
    match task {
        Task::Binary => out[0] = p[0] * (S::one() - p[0]) * g[0],
        Task::Classification { .. } => {
            let mut pg = S::zero();
            for (&pi, &gi) in p.iter().zip(g) {
                pg += pi * gi;
            }
            for ((o, &pi), &gi) in out.iter_mut().zip(p).zip(g) {
                *o = pi * (gi - pg);
            }
        }
        Task::Regression { .. } => out.copy_from_slice(g),
    }
}

/// Loss of one row and its partials with respect to the raw output and
/// the target. `scratch` must be at least as long as `o`.
pub(crate) fn row_loss<S: Scalar>(
    kind: LossKind,
    task: Task,
    o: &[S],
    z: &[S],
    d_o: &mut [S],
    d_z: &mut [S],
    scratch: &mut [S],
) -> S {
    match kind {
        LossKind::CrossEntropySoftmax => {
            let mut m = o[0];
            for &v in o {
                if v.re() > m.re() {
                    m = v;
                }
            }
            let mut sum = S::zero();
            for &v in o {
                sum += (v - m).exp();
            }
            let lse = m + sum.ln();
            let mut zsum = S::zero();
            for &zk in z {
                zsum += zk;
            }
            let mut loss = S::zero();
            for k in 0..o.len() {
                let logp = o[k] - lse;
                loss += -(z[k] * logp);
                d_o[k] = logp.exp() * zsum - z[k];
                d_z[k] = -logp;
            }
            loss
        }
        LossKind::BinaryCrossEntropySigmoid => {
            let (o0, z0) = (o[0], z[0]);
            d_o[0] = o0.sigmoid() - z0;
            d_z[0] = -o0;
            o0.softplus() - z0 * o0
        }
        LossKind::MeanSquaredError => {
            let p = &mut scratch[..o.len()];
            p.copy_from_slice(o);
            link_in_place(task, p);
            let mut loss = S::zero();
            for k in 0..o.len() {
                let r = p[k] - z[k];
                loss += r * r;
                d_z[k] = r.scale(-2.0);
            }
            // d_o = Jᵀ (2r) = Jᵀ(-d_z)
            for v in d_z[..o.len()].iter_mut() {
                *v = -*v;
            }
            link_vjp(task, p, d_z, d_o);
            for v in d_z[..o.len()].iter_mut() {
                *v = -*v;
            }
            loss
        }
    }
}
