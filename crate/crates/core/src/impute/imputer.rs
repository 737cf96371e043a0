use alloc::vec;
use alloc::vec::Vec;

use super::Transform;
use crate::netgrad::{self, Mlp, ParamVector, Task};
use crate::{Error, Matrix, Result, RngState};

#[derive(Debug, Clone, PartialEq)]
pub enum ImputerKind {
    /// The model's own prediction on a transformed input.
    PseudoLabel,
    /// Prediction of an exponential-moving-average teacher.
    MeanTeacher { alpha: f64, teacher: ParamVector },
    /// Average of `k` transformed predictions, sharpened with temperature `beta`.
    SharpenAvg { k: usize, beta: f64 },
    /// One-hot vector of the most likely class of one transformed prediction.
    ArgmaxOneHot,
}

impl ImputerKind {
    pub fn name(&self) -> &'static str {
        match self {
            ImputerKind::PseudoLabel => "pseudo_label",
            ImputerKind::MeanTeacher { .. } => "mean_teacher",
            ImputerKind::SharpenAvg { .. } => "sharpen_avg",
            ImputerKind::ArgmaxOneHot => "argmax_onehot",
        }
    }

    /// Whether `∂z/∂θ` is available (and possibly non-zero).
    pub fn is_differentiable(&self) -> bool {
        !matches!(self, ImputerKind::ArgmaxOneHot)
    }
}

/// Imputing function `ψ` together with the perturbation `T_η'` it sees.
#[derive(Debug, Clone, PartialEq)]
pub struct Imputer {
    pub kind: ImputerKind,
    pub transform: Transform,
    /// Subtract the applied jitter from regression labels (x/y interleaved).
    pub compensate_shift: bool,
}

impl Imputer {
    pub fn new(kind: ImputerKind, transform: Transform) -> Self {
        Self { kind, transform, compensate_shift: false }
    }

    pub fn passes(&self) -> usize {
        match self.kind {
            ImputerKind::SharpenAvg { k, .. } => k,
            _ => 1,
        }
    }

    pub fn validate(&self, model: &Mlp) -> Result<()> {
        self.transform.validate()?;
        match &self.kind {
            ImputerKind::MeanTeacher { alpha, teacher } => {
                if !(0.0..=1.0).contains(alpha) {
                    return Err(Error::invalid("alpha", "must lie in [0, 1]"));
                }
                model.check_params(teacher.len())?;
            }
            ImputerKind::SharpenAvg { k, beta } => {
                if *k == 0 {
                    return Err(Error::invalid("k", "need at least one pass"));
                }
                if !(*beta > 0.0) {
                    return Err(Error::invalid("beta", "temperature must be positive"));
                }
            }
            _ => {}
        }
        if !model.task().is_classification()
            && matches!(self.kind, ImputerKind::SharpenAvg { .. } | ImputerKind::ArgmaxOneHot)
        {
            return Err(Error::Config(alloc::format!(
                "imputer {} needs probability outputs and cannot be used for regression",
                self.kind.name()
            )));
        }
        Ok(())
    }
}

/// Unlabeled rows with their imputed labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputedBatch {
    /// Raw unlabeled inputs `x_u`.
    pub inputs: Matrix,
    /// Imputed labels `z`, one row per input.
    pub labels: Matrix,
    /// Seed of each transform pass.
    pub transform_seeds: Vec<u64>,
    /// Transformed inputs the imputer saw, one matrix per pass.
    pub passes: Vec<Matrix>,
    /// Accumulated jitter per row for each pass.
    pub shifts: Vec<Vec<(f64, f64)>>,
}

/// `p_i^{1/β} / Σ_j p_j^{1/β}`, evaluated in the log domain.
pub fn sharpen(p: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", "temperature must be positive"));
    }
    if p.is_empty() || p.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::invalid("p", "must be a non-empty non-negative vector"));
    }
    let logs: Vec<f64> = p.iter().map(|&v| libm::log(v) / beta).collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::invalid("p", "all components are zero"));
    }
    let e: Vec<f64> = logs.iter().map(|&l| libm::exp(l - m)).collect();
    let s: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / s).collect())
}

/// One-hot of the largest entry; ties go to the lowest index.
pub fn one_hot_argmax(row: &[f64]) -> Vec<f64> {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    let mut out = vec![0.0; row.len()];
    if !row.is_empty() {
        out[best] = 1.0;
    }
    out
}

/// Probability rows as full class vectors (binary `q` becomes `[1 - q, q]`).
fn class_probs(task: Task, probs: &Matrix, r: usize) -> Vec<f64> {
    match task {
        Task::Binary => {
            let q = probs.get(r, 0);
            vec![1.0 - q, q]
        }
        _ => probs.row(r).to_vec(),
    }
}

fn store_class_row(task: Task, labels: &mut Matrix, r: usize, v: &[f64]) {
    match task {
        Task::Binary => labels.set(r, 0, v[1]),
        _ => labels.row_mut(r).copy_from_slice(v),
    }
}

/// Draws the transforms and imputes `z` for every row of `x_u`.
pub fn impute(
    imputer: &Imputer,
    model: &Mlp,
    params: &ParamVector,
    x_u: &Matrix,
    rng: &mut RngState,
) -> Result<ImputedBatch> {
    imputer.validate(model)?;
    let mut passes = Vec::with_capacity(imputer.passes());
    let mut seeds = Vec::with_capacity(imputer.passes());
    let mut shifts = Vec::with_capacity(imputer.passes());
    for _ in 0..imputer.passes() {
        let seed = rng.next_u64();
        let applied = imputer.transform.apply(x_u, &mut RngState::new(seed))?;
        seeds.push(seed);
        passes.push(applied.output);
        shifts.push(applied.shifts);
    }
    let mut batch = ImputedBatch {
        inputs: x_u.clone(),
        labels: Matrix::zeros(x_u.rows(), model.output_dim()),
        transform_seeds: seeds,
        passes,
        shifts,
    };
    batch.labels = impute_passes(imputer, model, params, &batch)?;
    Ok(batch)
}

/// Recomputes `z` for an existing batch (same transformed inputs) with new parameters.
pub fn impute_passes(imputer: &Imputer, model: &Mlp, params: &ParamVector, batch: &ImputedBatch) -> Result<Matrix> {
    let task = model.task();
    let n = batch.inputs.rows();
    let mut labels = match &imputer.kind {
        ImputerKind::PseudoLabel => netgrad::predict(model, params, &batch.passes[0])?,
        ImputerKind::MeanTeacher { teacher, .. } => netgrad::predict(model, teacher, &batch.passes[0])?,
        ImputerKind::SharpenAvg { beta, .. } => {
            let k = batch.passes.len() as f64;
            let mut avg = Matrix::zeros(n, model.output_dim());
            for pass in &batch.passes {
                avg = avg.add(&netgrad::predict(model, params, pass)?)?;
            }
            let avg = avg.scale(1.0 / k);
            let mut out = Matrix::zeros(n, model.output_dim());
            for r in 0..n {
                let s = sharpen(&class_probs(task, &avg, r), *beta)?;
                store_class_row(task, &mut out, r, &s);
            }
            out
        }
        ImputerKind::ArgmaxOneHot => {
            // argmax on logits: softmax and sigmoid are monotone
            let logits = netgrad::forward(model, params, &batch.passes[0])?;
            let mut out = Matrix::zeros(n, model.output_dim());
            for r in 0..n {
                let row = match task {
                    Task::Binary => vec![0.0, logits.get(r, 0)],
                    _ => logits.row(r).to_vec(),
                };
                store_class_row(task, &mut out, r, &one_hot_argmax(&row));
            }
            out
        }
    };
    if imputer.compensate_shift && !task.is_classification() {
        for r in 0..n {
            let (dx, dy) = batch.shifts[0][r];
            for (c, v) in labels.row_mut(r).iter_mut().enumerate() {
                *v -= if c % 2 == 0 { dx } else { dy };
            }
        }
    }
    if !labels.is_finite() {
        return Err(Error::NonFinite("imputed labels"));
    }
    Ok(labels)
}

/// `(∂z/∂θ)ᵀ g`: pulls a gradient on the imputed labels back to the
/// imputing parameters. Zero for a frozen teacher; an error for argmax.
pub fn imputer_vjp(
    imputer: &Imputer,
    model: &Mlp,
    params: &ParamVector,
    batch: &ImputedBatch,
    grad_z: &Matrix,
) -> Result<ParamVector> {
    let task = model.task();
    if grad_z.shape() != batch.labels.shape() {
        return Err(Error::Shape { op: "imputer_vjp", left: grad_z.shape(), right: batch.labels.shape() });
    }
    match &imputer.kind {
        ImputerKind::MeanTeacher { .. } => Ok(ParamVector::zeros_like(params)),
        ImputerKind::ArgmaxOneHot => {
            Err(Error::Config("argmax_onehot labels are piecewise constant in θ; use label_mode=learnable".into()))
        }
        ImputerKind::PseudoLabel => {
            let probs = netgrad::predict(model, params, &batch.passes[0])?;
            let d_out = netgrad::predict_vjp(task, &probs, grad_z)?;
            netgrad::output_vjp(model, params, &batch.passes[0], &d_out)
        }
        ImputerKind::SharpenAvg { beta, .. } => {
            let n = batch.inputs.rows();
            let k = batch.passes.len() as f64;
            let probs: Vec<Matrix> =
                batch.passes.iter().map(|p| netgrad::predict(model, params, p)).collect::<Result<_>>()?;
            let mut avg = Matrix::zeros(n, model.output_dim());
            for p in &probs {
                avg = avg.add(p)?;
            }
            let avg = avg.scale(1.0 / k);
            // gradient on the averaged probabilities
            let mut g_avg = Matrix::zeros(n, model.output_dim());
            for r in 0..n {
                let pbar = class_probs(task, &avg, r);
                let s = sharpen(&pbar, *beta)?;
                let g: Vec<f64> = match task {
                    Task::Binary => vec![0.0, grad_z.get(r, 0)],
                    _ => grad_z.row(r).to_vec(),
                };
                let gs: f64 = g.iter().zip(&s).map(|(a, b)| a * b).sum();
                let gp: Vec<f64> = (0..pbar.len())
                    .map(|j| if pbar[j] > 0.0 { s[j] / (beta * pbar[j]) * (g[j] - gs) } else { 0.0 })
                    .collect();
                match task {
                    Task::Binary => g_avg.set(r, 0, gp[1] - gp[0]),
                    _ => g_avg.row_mut(r).copy_from_slice(&gp),
                }
            }
            let g_pass = g_avg.scale(1.0 / k);
            let mut total = ParamVector::zeros_like(params);
            for (pass, p) in batch.passes.iter().zip(&probs) {
                let d_out = netgrad::predict_vjp(task, p, &g_pass)?;
                let g = netgrad::output_vjp(model, params, pass, &d_out)?;
                total = total.axpy(1.0, &g)?;
            }
            Ok(total)
        }
    }
}
