use alloc::vec::Vec;

use super::unroll::label_grad_to_params;
use super::{
    inner_loop, meta_grad_approx, meta_grad_exact_l, BatchSizes, GradMode, Holdout, InnerProblem, LabelMode,
    MetaConfig, TrainConfig,
};
use crate::impute::{consistency_on, impute, impute_passes, ImputedBatch, Imputer, ImputerKind};
use crate::netgrad::{self, adam_step, ema_update, AdamState, Mlp, ParamVector, Task};
use crate::{Error, Matrix, Result, RngState};

/// Data the minibatches are drawn from. Under the joint policy the hold-out
/// pool is the labeled training pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Pools {
    pub train_x: Matrix,
    pub train_y: Matrix,
    pub unlabeled_x: Matrix,
    pub holdout_x: Matrix,
    pub holdout_y: Matrix,
}

/// One draw of `B^T`, `B^U` and `B^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batches {
    pub train_x: Matrix,
    pub train_y: Matrix,
    pub unlabeled_x: Matrix,
    pub holdout_x: Matrix,
    pub holdout_y: Matrix,
}

/// Samples the three minibatches with replacement, always in the same order
/// and always all three, so that every method sees the same batch stream.
pub fn sample_batches(pools: &Pools, sizes: &BatchSizes, rng: &mut RngState) -> Result<Batches> {
    if pools.train_x.rows() == 0 {
        return Err(Error::Empty("labeled pool"));
    }
    let t = rng.sample_indices(pools.train_x.rows(), sizes.labeled);
    let u = if pools.unlabeled_x.rows() == 0 {
        Vec::new()
    } else {
        rng.sample_indices(pools.unlabeled_x.rows(), sizes.unlabeled)
    };
    let h = if pools.holdout_x.rows() == 0 {
        Vec::new()
    } else {
        rng.sample_indices(pools.holdout_x.rows(), sizes.holdout)
    };
    Ok(Batches {
        train_x: pools.train_x.select_rows(&t),
        train_y: pools.train_y.select_rows(&t),
        unlabeled_x: pools.unlabeled_x.select_rows(&u),
        holdout_x: pools.holdout_x.select_rows(&h),
        holdout_y: pools.holdout_y.select_rows(&h),
    })
}

/// Everything that evolves during training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub params: ParamVector,
    pub adam: AdamState,
    /// Present when the outer update keeps its own moments.
    pub outer_adam: Option<AdamState>,
    /// Evaluation weights.
    pub ema: ParamVector,
    /// Imputer with its live teacher, if any.
    pub imputer: Option<Imputer>,
    pub step: usize,
    /// Stream for minibatch indices.
    pub rng_batches: RngState,
    /// Stream for input transforms.
    pub rng_aug: RngState,
}

impl TrainerState {
    /// Glorot-initialized state; three independent streams of `seed` drive
    /// initialization, batches and transforms.
    pub fn new(model: &Mlp, cfg: &TrainConfig, meta: Option<&MetaConfig>, seed: u64) -> Result<Self> {
        let params = model.init_params(&mut RngState::with_stream(seed, 0));
        Self::with_params(model, cfg, meta, params, seed)
    }

    pub fn with_params(
        model: &Mlp,
        cfg: &TrainConfig,
        meta: Option<&MetaConfig>,
        params: ParamVector,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate(model)?;
        if let Some(m) = meta {
            m.validate(cfg)?;
        }
        model.check_params(params.len())?;
        let imputer = cfg.imputer.clone().map(|mut imp| {
            if let ImputerKind::MeanTeacher { teacher, .. } = &mut imp.kind {
                *teacher = params.clone();
            }
            imp
        });
        let n = params.len();
        Ok(Self {
            adam: AdamState::new(n),
            outer_adam: meta.filter(|m| m.separate_outer_adam).map(|_| AdamState::new(n)),
            ema: params.clone(),
            params,
            imputer,
            step: 0,
            rng_batches: RngState::with_stream(seed, 1),
            rng_aug: RngState::with_stream(seed, 2),
        })
    }
}

/// Telemetry of one training iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaStepReport {
    /// `C^T(θ^t)`.
    pub c_train: f64,
    /// `C^U(θ^t)`, unweighted.
    pub c_unlabeled: f64,
    /// `C^H(θ*)` before the outer update; NaN for baseline steps.
    pub c_holdout_before: f64,
    /// `C^H` after re-running the inner loop from the updated parameters.
    pub c_holdout_after: f64,
    pub meta_grad_norm: f64,
    /// `‖ẑ - z‖` in learnable-label mode.
    pub z_shift_norm: f64,
    pub lambda: f64,
    /// True when the outer update was skipped (zero or non-finite gradient).
    pub outer_skipped: bool,
}

struct FirstPhase {
    batch: Option<ImputedBatch>,
    consistency_input: Matrix,
    lambda: f64,
    theta_hat: ParamVector,
    adam: AdamState,
    aug: RngState,
    c_train: f64,
    c_unlabeled: f64,
}

/// Imputation with `θ^t`, then the Adam step on `C^T + λ C^U` giving `θ̂`.
fn first_phase(model: &Mlp, state: &TrainerState, b: &Batches, cfg: &TrainConfig) -> Result<FirstPhase> {
    let lambda = cfg.lambda.at(state.step);
    let mut aug = state.rng_aug.clone();
    let sup = netgrad::loss_and_grads(model, &state.params, &b.train_x, &b.train_y, cfg.supervised)?;
    let (batch, consistency_input, grad, c_unlabeled) = match &state.imputer {
        Some(imp) if b.unlabeled_x.rows() > 0 => {
            let batch = impute(imp, model, &state.params, &b.unlabeled_x, &mut aug)?;
            let input = cfg.consistency.perturb(&b.unlabeled_x, &mut aug)?;
            let u = consistency_on(model, &state.params, &input, &batch.labels, cfg.consistency.d)?;
            let g = sup.grad_params.axpy(lambda, &u.grad_params)?;
            (Some(batch), input, g, u.loss)
        }
        _ => (None, Matrix::zeros(0, model.input_dim()), sup.grad_params, 0.0),
    };
    if !grad.is_finite() {
        return Err(Error::NonFinite("training gradient"));
    }
    let (theta_hat, adam) = adam_step(&state.adam, &state.params, &grad, &cfg.adam)?;
    Ok(FirstPhase { batch, consistency_input, lambda, theta_hat, adam, aug, c_train: sup.loss, c_unlabeled })
}

fn commit(
    state: &mut TrainerState,
    cfg: &TrainConfig,
    next: ParamVector,
    adam: AdamState,
    aug: RngState,
) -> Result<()> {
    state.ema = ema_update(&state.ema, &next, cfg.ema_alpha)?;
    if let Some(Imputer { kind: ImputerKind::MeanTeacher { alpha, teacher }, .. }) = &mut state.imputer {
        *teacher = ema_update(teacher, &next, *alpha)?;
    }
    state.params = next;
    state.adam = adam;
    state.rng_aug = aug;
    state.step += 1;
    Ok(())
}

/// Plain semi-supervised step (supervised only when there is no imputer).
/// On error the state is left untouched.
pub fn baseline_step(model: &Mlp, state: &mut TrainerState, b: &Batches, cfg: &TrainConfig) -> Result<MetaStepReport> {
    let fp = first_phase(model, state, b, cfg)?;
    let report = MetaStepReport {
        c_train: fp.c_train,
        c_unlabeled: fp.c_unlabeled,
        c_holdout_before: f64::NAN,
        c_holdout_after: f64::NAN,
        meta_grad_norm: 0.0,
        z_shift_norm: 0.0,
        lambda: fp.lambda,
        outer_skipped: true,
    };
    commit(state, cfg, fp.theta_hat, fp.adam, fp.aug)?;
    Ok(report)
}

fn usable(g: &ParamVector) -> bool {
    g.is_finite() && g.values().iter().any(|&v| v != 0.0)
}

/// One bilevel iteration: impute, Adam step to `θ̂`, re-impute with `θ̂`,
/// unroll the inner loop to `θ*`, then update either `θ̂` (output labels) or
/// `z` followed by a refit of `θ̂` (learnable labels).
///
/// A non-finite value before `θ̂` exists returns an error and leaves the
/// state untouched; one in the outer phase only skips the outer update.
pub fn l2i_train_step(
    model: &Mlp,
    state: &mut TrainerState,
    b: &Batches,
    cfg: &TrainConfig,
    meta: &MetaConfig,
) -> Result<MetaStepReport> {
    let mut fp = first_phase(model, state, b, cfg)?;
    let imp = state.imputer.clone().ok_or_else(|| Error::Config("the bilevel update needs an imputer".into()))?;
    let mut report = MetaStepReport {
        c_train: fp.c_train,
        c_unlabeled: fp.c_unlabeled,
        c_holdout_before: f64::NAN,
        c_holdout_after: f64::NAN,
        meta_grad_norm: 0.0,
        z_shift_norm: 0.0,
        lambda: fp.lambda,
        outer_skipped: true,
    };
    let Some(mut batch) = fp.batch.take() else {
        commit(state, cfg, fp.theta_hat, fp.adam, fp.aug)?;
        return Ok(report);
    };
    let outcome = outer_update(model, state, b, cfg, meta, &imp, &mut batch, &fp, &mut report);
    let (next, adam, outer_adam) = match outcome {
        Ok(Some(v)) => v,
        Ok(None) => (fp.theta_hat.clone(), fp.adam.clone(), state.outer_adam.clone()),
        Err(Error::NonFinite(what)) => {
            log::warn!("step {}: non-finite {what}; outer update skipped", state.step);
            (fp.theta_hat.clone(), fp.adam.clone(), state.outer_adam.clone())
        }
        Err(e) => return Err(e),
    };
    state.outer_adam = outer_adam;
    commit(state, cfg, next, adam, fp.aug)?;
    Ok(report)
}

type Outer = Option<(ParamVector, AdamState, Option<AdamState>)>;

#[allow(clippy::too_many_arguments)]
fn outer_update(
    model: &Mlp,
    state: &TrainerState,
    b: &Batches,
    cfg: &TrainConfig,
    meta: &MetaConfig,
    imp: &Imputer,
    batch: &mut ImputedBatch,
    fp: &FirstPhase,
    report: &mut MetaStepReport,
) -> Result<Outer> {
    batch.labels = impute_passes(imp, model, &fp.theta_hat, batch)?;
    let problem = InnerProblem {
        train_x: &b.train_x,
        train_y: &b.train_y,
        unlabeled: &fp.consistency_input,
        supervised: cfg.supervised,
        d: cfg.consistency.d,
        lambda: if meta.literal_inner_lambda { 1.0 } else { fp.lambda },
        eta: meta.eta_theta,
        steps: meta.inner_steps,
    };
    let holdout = Holdout { x: &b.holdout_x, y: &b.holdout_y, loss: cfg.supervised };
    let (_, tape) = inner_loop(model, &fp.theta_hat, &batch.labels, problem)?;
    let lg = match meta.grad_mode {
        GradMode::Exact => meta_grad_exact_l(model, &tape, &holdout)?,
        GradMode::Approx => meta_grad_approx(model, &tape, &holdout)?,
    };
    report.c_holdout_before = lg.c_holdout;
    if !lg.c_holdout.is_finite() {
        return Err(Error::NonFinite("hold-out loss"));
    }
    let supervised_grad = || -> Result<ParamVector> {
        Ok(netgrad::loss_and_grads(model, &fp.theta_hat, &b.train_x, &b.train_y, cfg.supervised)?.grad_params)
    };
    let (grad, z_after) = match meta.label_mode {
        LabelMode::Output => {
            let mut g = label_grad_to_params(model, &fp.theta_hat, imp, batch, &lg.grad_z)?;
            report.meta_grad_norm = g.norm();
            if meta.outer_includes_supervised {
                g = g.axpy(1.0, &supervised_grad()?)?;
            }
            (g, None)
        }
        LabelMode::Learnable => {
            let step = lg.grad_z.scale(meta.eta_z);
            let z_hat = batch.labels.sub(&step)?;
            report.meta_grad_norm = lg.grad_z.norm();
            report.z_shift_norm = step.norm();
            let u = consistency_on(model, &fp.theta_hat, &fp.consistency_input, &z_hat, cfg.consistency.d)?;
            let mut g = u.grad_params.scale(fp.lambda);
            if meta.outer_includes_supervised {
                g = g.axpy(1.0, &supervised_grad()?)?;
            }
            (g, Some(z_hat))
        }
    };
    if !grad.is_finite() {
        return Err(Error::NonFinite("outer gradient"));
    }
    if !usable(&grad) {
        return Ok(None);
    }
    let (next, adam, outer_adam) = match &state.outer_adam {
        Some(o) => {
            let (next, o2) = adam_step(o, &fp.theta_hat, &grad, &cfg.adam)?;
            (next, fp.adam.clone(), Some(o2))
        }
        None => {
            let (next, a2) = adam_step(&fp.adam, &fp.theta_hat, &grad, &cfg.adam)?;
            (next, a2, None)
        }
    };
    // L mode measures the label update alone: same start, updated labels.
    let (after_star, _) = match z_after {
        Some(z) => inner_loop(model, &fp.theta_hat, &z, problem)?,
        None => inner_loop(model, &next, &impute_passes(imp, model, &next, batch)?, problem)?,
    };
    report.c_holdout_after = holdout.loss_at(model, &after_star)?;
    report.outer_skipped = false;
    Ok(Some((next, adam, outer_adam)))
}

trait ParamScale {
    fn scale(&self, s: f64) -> ParamVector;
}

impl ParamScale for ParamVector {
    fn scale(&self, s: f64) -> ParamVector {
        let mut out = self.clone();
        out.values_mut().iter_mut().for_each(|v| *v *= s);
        out
    }
}

/// Class index of every row: the larger logit wins, ties go to the lower
/// index, and a binary logit above zero means class 1.
pub fn predicted_classes(model: &Mlp, params: &ParamVector, x: &Matrix) -> Result<Vec<usize>> {
    let logits = netgrad::forward(model, params, x)?;
    Ok(logits.iter_rows().map(|r| row_class(model.task(), r)).collect())
}

/// Class index of every target row (0/1 column for binary, one-hot rows otherwise).
pub fn target_classes(task: Task, y: &Matrix) -> Vec<usize> {
    y.iter_rows()
        .map(|r| match task {
            Task::Binary => usize::from(r[0] >= 0.5),
            _ => argmax(r),
        })
        .collect()
}

fn row_class(task: Task, r: &[f64]) -> usize {
    match task {
        Task::Binary => usize::from(r[0] > 0.0),
        _ => argmax(r),
    }
}

fn argmax(r: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in r.iter().enumerate() {
        if v > r[best] {
            best = i;
        }
    }
    best
}

/// Fraction of mismatched labels.
pub fn error_rate(pred: &[usize], labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    if pred.len() != labels.len() {
        return Err(Error::length("error_rate", labels.len(), pred.len()));
    }
    let wrong = pred.iter().zip(labels).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / labels.len() as f64)
}

/// Error rate for classification; for regression the mean over all entries
/// of `((prediction - target) / scale)²`.
pub fn evaluate_params(model: &Mlp, params: &ParamVector, x: &Matrix, y: &Matrix, scale: Option<f64>) -> Result<f64> {
    if x.rows() == 0 {
        return Err(Error::Empty("evaluation set"));
    }
    if y.rows() != x.rows() {
        return Err(Error::length("evaluation targets", x.rows(), y.rows()));
    }
    let task = model.task();
    if task.is_classification() {
        return error_rate(&predicted_classes(model, params, x)?, &target_classes(task, y));
    }
    let s = scale.unwrap_or(1.0);
    if !(s > 0.0) {
        return Err(Error::invalid("scale", "must be positive"));
    }
    let pred = netgrad::forward(model, params, x)?;
    let diff = pred.sub(y)?;
    let sq: f64 = diff.data().iter().map(|d| (d / s) * (d / s)).sum();
    Ok(sq / diff.data().len() as f64)
}

/// [`evaluate_params`] with the evaluation EMA.
pub fn evaluate(model: &Mlp, state: &TrainerState, x: &Matrix, y: &Matrix, scale: Option<f64>) -> Result<f64> {
    evaluate_params(model, &state.ema, x, y, scale)
}
