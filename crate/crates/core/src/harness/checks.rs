//! Gradient self-checks: library hypergradients against finite differences
//! and closed forms on small random instances.

use alloc::vec;
use alloc::vec::Vec;

use crate::impute::{impute, impute_passes, ImputedBatch, Imputer, ImputerKind, Transform};
use crate::meta::{inner_loop, meta_grad_approx, meta_grad_exact_l, meta_grad_exact_o, Holdout, InnerProblem};
use crate::netgrad::{Activation, LossKind, Mlp, ParamVector, Task};
use crate::oracle::{self, finite_diff, max_rel_err, OneLayerInstance, Reduction};
use crate::{Matrix, Result, RngState};

/// Default pass thresholds, in the order of [`CheckKind::ALL`].
pub const DEFAULT_THRESHOLDS: [f64; 4] = [1e-4, 1e-4, 1e-8, 1e-10];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    /// Exact label gradient against central differences (relative error).
    ExactLabel,
    /// Exact output-mode gradient against central differences (relative error).
    ExactOutput,
    /// One-layer exact gradients against closed forms (absolute error).
    OneLayer,
    /// Last-layer approximation against the exact label gradient on linear
    /// models (absolute error).
    ApproxLinear,
}

impl CheckKind {
    pub const ALL: [CheckKind; 4] =
        [CheckKind::ExactLabel, CheckKind::ExactOutput, CheckKind::OneLayer, CheckKind::ApproxLinear];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::ExactLabel => "exact_l_vs_fd",
            CheckKind::ExactOutput => "exact_o_vs_fd",
            CheckKind::OneLayer => "one_layer_vs_closed_form",
            CheckKind::ApproxLinear => "approx_vs_exact_linear",
        }
    }

    pub fn default_threshold(self) -> f64 {
        DEFAULT_THRESHOLDS[self as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckResult {
    pub kind: CheckKind,
    pub instances: usize,
    pub max_err: f64,
    pub threshold: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_err < self.threshold
    }
}

fn rand_matrix(rng: &mut RngState, r: usize, c: usize) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).expect("sized buffer")
}

fn rand_targets(task: Task, rng: &mut RngState, n: usize) -> Matrix {
    match task {
        Task::Binary => Matrix::from_vec(n, 1, (0..n).map(|_| rng.below(2) as f64).collect()).expect("sized buffer"),
        Task::Classification { classes } => {
            let mut m = Matrix::zeros(n, classes);
            for r in 0..n {
                m.set(r, rng.below(classes), 1.0);
            }
            m
        }
        Task::Regression { dim } => rand_matrix(rng, n, dim),
    }
}

/// A random bilevel problem: data, parameters `θ̂` and an imputed batch.
struct Instance {
    model: Mlp,
    theta_hat: ParamVector,
    train_x: Matrix,
    train_y: Matrix,
    unl: Matrix,
    hold_x: Matrix,
    hold_y: Matrix,
    imputer: Imputer,
    batch: ImputedBatch,
    d: LossKind,
    eta: f64,
    lambda: f64,
    steps: usize,
}

/// Task and consistency loss cycled over the instance index.
const CASES: [(Task, LossKind); 4] = [
    (Task::Binary, LossKind::BinaryCrossEntropySigmoid),
    (Task::Classification { classes: 2 }, LossKind::CrossEntropySoftmax),
    (Task::Classification { classes: 2 }, LossKind::MeanSquaredError),
    (Task::Regression { dim: 2 }, LossKind::MeanSquaredError),
];

impl Instance {
    fn random(i: usize, hidden: Option<usize>, rng: &mut RngState) -> Result<Self> {
        let (task, d) = CASES[i % CASES.len()];
        let model = match hidden {
            Some(h) => Mlp::new(2, &[h], Activation::Tanh, task)?,
            None => Mlp::linear(2, task, i.is_multiple_of(2))?,
        };
        let theta_hat = model.init_params(rng);
        let n_u = 1 + rng.below(4);
        let n_h = 1 + rng.below(8);
        let train_x = rand_matrix(rng, 3, 2);
        let train_y = rand_targets(task, rng, 3);
        let unl = rand_matrix(rng, n_u, 2);
        let hold_x = rand_matrix(rng, n_h, 2);
        let hold_y = rand_targets(task, rng, n_h);
        let x_u = rand_matrix(rng, n_u, 2);
        let imputer = Imputer::new(ImputerKind::PseudoLabel, Transform::GaussianNoise { sigma: 0.2 });
        let batch = impute(&imputer, &model, &theta_hat, &x_u, rng)?;
        Ok(Self {
            eta: rng.uniform_range(0.1, 0.6),
            lambda: rng.uniform_range(0.5, 1.5),
            steps: 1 + rng.below(2),
            model,
            theta_hat,
            train_x,
            train_y,
            unl,
            hold_x,
            hold_y,
            imputer,
            batch,
            d,
        })
    }

    fn problem(&self) -> InnerProblem<'_> {
        InnerProblem {
            train_x: &self.train_x,
            train_y: &self.train_y,
            unlabeled: &self.unl,
            supervised: LossKind::supervised_for(self.model.task()),
            d: self.d,
            lambda: self.lambda,
            eta: self.eta,
            steps: self.steps,
        }
    }

    fn holdout(&self) -> Holdout<'_> {
        Holdout { x: &self.hold_x, y: &self.hold_y, loss: LossKind::supervised_for(self.model.task()) }
    }

    fn c_h(&self, from: &ParamVector, z: &Matrix) -> Result<f64> {
        let (star, _) = inner_loop(&self.model, from, z, self.problem())?;
        self.holdout().loss_at(&self.model, &star)
    }
}

const FD_STEP: f64 = 1e-5;

/// Running maximum that turns a NaN error into a failure.
fn worse(acc: f64, err: f64) -> f64 {
    if err.is_nan() {
        f64::INFINITY
    } else {
        acc.max(err)
    }
}

/// Worst relative error of the exact label gradient over `n` random
/// instances with one hidden layer of 16 units.
pub fn check_exact_label(seed: u64, n: usize) -> Result<f64> {
    let mut rng = RngState::with_stream(seed, 10);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let inst = Instance::random(i, Some(16), &mut rng)?;
        let z = &inst.batch.labels;
        let (_, tape) = inner_loop(&inst.model, &inst.theta_hat, z, inst.problem())?;
        let g = meta_grad_exact_l(&inst.model, &tape, &inst.holdout())?;
        let (r, c) = z.shape();
        let mut failed = None;
        let fd = finite_diff(
            |v| match Matrix::from_vec(r, c, v.to_vec()).and_then(|m| inst.c_h(&inst.theta_hat, &m)) {
                Ok(x) => x,
                Err(e) => {
                    failed = Some(e);
                    f64::NAN
                }
            },
            z.data(),
            FD_STEP,
        )?;
        if let Some(e) = failed {
            return Err(e);
        }
        worst = worse(worst, max_rel_err(&fd, g.grad_z.data()));
    }
    Ok(worst)
}

/// Worst relative error of the exact output-mode gradient (pseudo-label
/// imputer) over `n` random instances.
pub fn check_exact_output(seed: u64, n: usize) -> Result<f64> {
    let mut rng = RngState::with_stream(seed, 11);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let inst = Instance::random(i, Some(16), &mut rng)?;
        let (_, tape) = inner_loop(&inst.model, &inst.theta_hat, &inst.batch.labels, inst.problem())?;
        let (g, _) = meta_grad_exact_o(&inst.model, &tape, &inst.holdout(), &inst.imputer, &inst.batch)?;
        let mut failed = None;
        let fd = finite_diff(
            |v| {
                let r = inst.theta_hat.with_values(v.to_vec()).and_then(|phi| {
                    let z = impute_passes(&inst.imputer, &inst.model, &phi, &inst.batch)?;
                    inst.c_h(&inst.theta_hat, &z)
                });
                r.unwrap_or_else(|e| {
                    failed = Some(e);
                    f64::NAN
                })
            },
            inst.theta_hat.values(),
            FD_STEP,
        )?;
        if let Some(e) = failed {
            return Err(e);
        }
        worst = worse(worst, max_rel_err(&fd, g.values()));
    }
    Ok(worst)
}

fn one_layer_instance(rng: &mut RngState, d: usize, binary: bool) -> OneLayerInstance {
    let v = |rng: &mut RngState| (0..d).map(|_| rng.uniform_range(-1.0, 1.0)).collect::<Vec<f64>>();
    let label = |rng: &mut RngState| {
        if binary {
            rng.below(2) as f64
        } else {
            rng.uniform_range(-1.0, 1.0)
        }
    };
    let n_t = 1 + rng.below(4);
    let n_h = 1 + rng.below(8);
    OneLayerInstance {
        theta: v(rng),
        train: (0..n_t).map(|_| (v(rng), label(rng))).collect(),
        holdout: (0..n_h).map(|_| (v(rng), label(rng))).collect(),
        x_u: v(rng),
        eta_perturb: v(rng).iter().map(|x| 0.3 * x).collect(),
        eta_theta: rng.uniform_range(0.1, 0.6),
        lambda: rng.uniform_range(0.5, 1.5),
        reduction: Reduction::Mean,
    }
}

fn column(pairs: &[(Vec<f64>, f64)]) -> Result<(Matrix, Matrix)> {
    let x: Vec<&[f64]> = pairs.iter().map(|p| p.0.as_slice()).collect();
    let y: Vec<[f64; 1]> = pairs.iter().map(|p| [p.1]).collect();
    Ok((Matrix::from_rows(&x)?, Matrix::from_rows(&y)?))
}

/// Library exact gradients (label and output mode) for a one-layer instance.
fn one_layer_library(inst: &OneLayerInstance, binary: bool) -> Result<(f64, Vec<f64>)> {
    let d = inst.theta.len();
    let task = if binary { Task::Binary } else { Task::Regression { dim: 1 } };
    let loss = LossKind::supervised_for(task);
    let model = Mlp::linear(d, task, false)?;
    let theta = ParamVector::new(inst.theta.clone(), model.shapes())?;
    let (tx, ty) = column(&inst.train)?;
    let (hx, hy) = column(&inst.holdout)?;
    let xu = Matrix::from_rows(&[inst.x_u.as_slice()])?;
    let pert: Vec<f64> = inst.x_u.iter().zip(&inst.eta_perturb).map(|(a, b)| a + b).collect();
    let imputer = Imputer::new(ImputerKind::PseudoLabel, Transform::Identity);
    let mut batch = ImputedBatch {
        inputs: xu.clone(),
        labels: Matrix::zeros(1, 1),
        transform_seeds: vec![0],
        passes: vec![Matrix::from_rows(&[pert])?],
        shifts: vec![vec![(0.0, 0.0)]],
    };
    batch.labels = impute_passes(&imputer, &model, &theta, &batch)?;
    let p = InnerProblem {
        train_x: &tx,
        train_y: &ty,
        unlabeled: &xu,
        supervised: loss,
        d: loss,
        lambda: inst.lambda,
        eta: inst.eta_theta,
        steps: 1,
    };
    let (_, tape) = inner_loop(&model, &theta, &batch.labels, p)?;
    let h = Holdout { x: &hx, y: &hy, loss };
    let (g, lg) = meta_grad_exact_o(&model, &tape, &h, &imputer, &batch)?;
    Ok((lg.grad_z.get(0, 0), g.values().to_vec()))
}

/// Worst absolute error between library and closed-form one-layer
/// gradients, over `n` binary and `n` regression instances.
pub fn check_one_layer(seed: u64, n: usize) -> Result<f64> {
    let mut rng = RngState::with_stream(seed, 12);
    let mut worst: f64 = 0.0;
    for binary in [true, false] {
        for _ in 0..n {
            let d = 2 + rng.below(3);
            let inst = one_layer_instance(&mut rng, d, binary);
            let (gz, gt) = one_layer_library(&inst, binary)?;
            let (wz, wt) = if binary {
                (oracle::analytic_grad_z_binary(&inst), oracle::analytic_grad_theta_binary(&inst))
            } else {
                (oracle::analytic_grad_z_regression(&inst), oracle::analytic_grad_theta_regression(&inst))
            };
            worst = worse(worst, (gz - wz).abs());
            for (a, b) in gt.iter().zip(&wt) {
                worst = worse(worst, (a - b).abs());
            }
        }
    }
    Ok(worst)
}

/// Worst absolute difference between the approximate and exact label
/// gradients on one-step linear models.
pub fn check_approx_linear(seed: u64, n: usize) -> Result<f64> {
    let mut rng = RngState::with_stream(seed, 13);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut inst = Instance::random(i, None, &mut rng)?;
        inst.steps = 1;
        let (_, tape) = inner_loop(&inst.model, &inst.theta_hat, &inst.batch.labels, inst.problem())?;
        let exact = meta_grad_exact_l(&inst.model, &tape, &inst.holdout())?;
        let approx = meta_grad_approx(&inst.model, &tape, &inst.holdout())?;
        for (a, b) in exact.grad_z.data().iter().zip(approx.grad_z.data()) {
            worst = worse(worst, (a - b).abs());
        }
    }
    Ok(worst)
}

/// Number of one-hidden-layer instances (out of `n`) on which the
/// approximate and exact label gradients have positive cosine similarity.
pub fn approx_direction_agreement(seed: u64, n: usize) -> Result<usize> {
    let mut rng = RngState::with_stream(seed, 14);
    let mut agree = 0;
    for i in 0..n {
        let mut inst = Instance::random(i, Some(8), &mut rng)?;
        inst.steps = 1;
        let (_, tape) = inner_loop(&inst.model, &inst.theta_hat, &inst.batch.labels, inst.problem())?;
        let e = meta_grad_exact_l(&inst.model, &tape, &inst.holdout())?.grad_z;
        let a = meta_grad_approx(&inst.model, &tape, &inst.holdout())?.grad_z;
        let dot: f64 = e.data().iter().zip(a.data()).map(|(x, y)| x * y).sum();
        if dot > 0.0 && e.norm() > 0.0 && a.norm() > 0.0 {
            agree += 1;
        }
    }
    Ok(agree)
}

/// Runs all four checks; `thresholds` default to [`DEFAULT_THRESHOLDS`].
pub fn run_checks(seed: u64, instances: usize, thresholds: Option<[f64; 4]>) -> Result<Vec<CheckResult>> {
    let th = thresholds.unwrap_or(DEFAULT_THRESHOLDS);
    let errs = [
        check_exact_label(seed, instances)?,
        check_exact_output(seed, instances)?,
        check_one_layer(seed, instances)?,
        check_approx_linear(seed, instances)?,
    ];
    Ok(CheckKind::ALL
        .iter()
        .zip(errs)
        .zip(th)
        .map(|((&kind, max_err), threshold)| CheckResult { kind, instances, max_err, threshold })
        .collect())
}
