//! Named experiments: data, model, method and schedule in one value, run
//! deterministically per seed.

mod checks;

pub use checks::{
    approx_direction_agreement, check_approx_linear, check_exact_label, check_exact_output, check_one_layer,
    run_checks, CheckKind, CheckResult, DEFAULT_THRESHOLDS,
};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::datagen::{self, make_splits, LabeledSet, SplitSpec, Splits, Targets, UnlabeledSet};
use crate::meta::{
    baseline_step, evaluate, l2i_train_step, sample_batches, HoldoutPolicy, MetaConfig, MetaStepReport, Pools,
    TrainConfig, TrainerState,
};
use crate::netgrad::{Activation, Mlp, Task};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    TwoMoons {
        n: usize,
        noise: f64,
    },
    Circles {
        n: usize,
        noise: f64,
    },
    Landmarks {
        n: usize,
        jitter: f64,
    },
    /// A fixed labeled set, plus optional extra unlabeled rows.
    Given {
        labeled: LabeledSet,
        unlabeled: Option<UnlabeledSet>,
    },
}

impl DataSource {
    pub fn name(&self) -> &'static str {
        match self {
            DataSource::TwoMoons { .. } => "two_moons",
            DataSource::Circles { .. } => "circles",
            DataSource::Landmarks { .. } => "landmarks",
            DataSource::Given { .. } => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub source: DataSource,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_test: usize,
    pub holdout: HoldoutPolicy,
    /// Divides regression errors before squaring.
    pub eval_scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Use one sigmoid output instead of a two-way softmax for two classes.
    pub binary_head: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub data: DataSpec,
    pub model: ModelSpec,
    pub train: TrainConfig,
    /// Bilevel update; plain baseline training when absent.
    pub l2i: Option<MetaConfig>,
    pub steps: usize,
    pub seeds: Vec<u64>,
    pub eval_every: usize,
}

impl ExperimentSpec {
    /// `supervised`, the imputer name, or the imputer name with an `-l2i` suffix.
    pub fn method(&self) -> String {
        let base = match &self.train.imputer {
            None => "supervised",
            Some(imp) => imp.kind.name(),
        };
        match self.l2i {
            Some(_) => format!("{base}-l2i"),
            None => String::from(base),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::invalid("eval_every", "must be at least 1"));
        }
        if self.l2i.is_some() && self.data.holdout == HoldoutPolicy::Separate && self.data.n_labeled < 2 {
            return Err(Error::Config("a separate hold-out set needs at least 2 labeled samples".into()));
        }
        if let Some(m) = &self.l2i {
            if m.holdout != self.data.holdout {
                return Err(Error::Config("l2i.holdout and data.holdout disagree".into()));
            }
        }
        Ok(())
    }
}

/// One row of telemetry. Fields that do not apply are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub step: usize,
    pub c_train: f64,
    pub c_unlabeled: f64,
    pub c_holdout_before: f64,
    pub c_holdout_after: f64,
    /// Error rate or scaled MSE with the evaluation weights; NaN between evaluations.
    pub test_metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    /// Step 0 is the evaluation before training.
    pub rows: Vec<Row>,
    pub final_metric: f64,
}

/// Median of the evaluated test metric over the last 20% of steps; the
/// initial evaluation when nothing was trained.
pub fn tail_median(rows: &[Row], steps: usize) -> f64 {
    let cutoff = steps as f64 * 0.8;
    let mut tail: Vec<f64> = rows
        .iter()
        .filter(|r| r.step > 0 && r.step as f64 > cutoff && !r.test_metric.is_nan())
        .map(|r| r.test_metric)
        .collect();
    if tail.is_empty() {
        return rows.first().map_or(f64::NAN, |r| r.test_metric);
    }
    tail.sort_by(f64::total_cmp);
    let m = tail.len();
    if m % 2 == 1 {
        tail[m / 2]
    } else {
        0.5 * (tail[m / 2 - 1] + tail[m / 2])
    }
}

fn task_for(targets: &Targets, model: &ModelSpec) -> Task {
    match targets {
        Targets::Classes { classes, .. } if *classes == 2 && model.binary_head => Task::Binary,
        Targets::Classes { classes, .. } => Task::Classification { classes: *classes },
        Targets::Values(m) => Task::Regression { dim: m.cols() },
    }
}

/// Dataset, model and batch pools for one seed.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub model: Mlp,
    pub splits: Splits,
    pub pools: Pools,
}

pub fn prepare(spec: &ExperimentSpec, seed: u64) -> Result<Prepared> {
    let d = &spec.data;
    let (set, extra) = match &d.source {
        DataSource::TwoMoons { n, noise } => (datagen::two_moons(*n, *noise, seed)?, None),
        DataSource::Circles { n, noise } => (datagen::circles(*n, *noise, seed)?, None),
        DataSource::Landmarks { n, jitter } => (datagen::synthetic_landmarks(*n, *jitter, seed)?, None),
        DataSource::Given { labeled, unlabeled } => (labeled.clone(), unlabeled.clone()),
    };
    let mut splits = make_splits(
        &set,
        &SplitSpec { n_labeled: d.n_labeled, n_unlabeled: d.n_unlabeled, n_test: d.n_test, holdout: d.holdout, seed },
    )?;
    if let Some(extra) = extra {
        let mut rows: Vec<&[f64]> = splits.unlabeled.inputs.iter_rows().collect();
        rows.extend(extra.inputs.iter_rows());
        if !rows.is_empty() {
            splits.unlabeled.inputs = crate::Matrix::from_rows(&rows)?;
        }
    }
    let task = task_for(&set.targets, &spec.model);
    let model = Mlp::new(set.inputs.cols(), &spec.model.hidden, spec.model.activation, task)?;
    let pools = Pools {
        train_x: splits.train.inputs.clone(),
        train_y: splits.train.targets.encode(task)?,
        unlabeled_x: splits.unlabeled.inputs.clone(),
        holdout_x: splits.holdout.inputs.clone(),
        holdout_y: splits.holdout.targets.encode(task)?,
    };
    Ok(Prepared { model, splits, pools })
}

fn row_from(step: usize, r: &MetaStepReport) -> Row {
    Row {
        step,
        c_train: r.c_train,
        c_unlabeled: r.c_unlabeled,
        c_holdout_before: r.c_holdout_before,
        c_holdout_after: r.c_holdout_after,
        test_metric: f64::NAN,
    }
}

/// Trains one seed and records a row per step.
pub fn run_seed(spec: &ExperimentSpec, seed: u64) -> Result<RunRecord> {
    run_seed_observed(spec, seed, &mut |_| {})
}

/// [`run_seed`] that hands every evaluated row to `on_eval` as it is produced.
pub fn run_seed_observed(spec: &ExperimentSpec, seed: u64, on_eval: &mut dyn FnMut(&Row)) -> Result<RunRecord> {
    let wrap = |e: Error| Error::Seed { seed, source: alloc::boxed::Box::new(e) };
    spec.validate()?;
    let p = prepare(spec, seed).map_err(wrap)?;
    let model = &p.model;
    let test_y = p.splits.test.targets.encode(model.task()).map_err(wrap)?;
    let test_x = &p.splits.test.inputs;
    let eval = |state: &TrainerState| evaluate(model, state, test_x, &test_y, spec.data.eval_scale);
    let mut state = TrainerState::new(model, &spec.train, spec.l2i.as_ref(), seed).map_err(wrap)?;
    let mut rows = Vec::with_capacity(spec.steps + 1);
    rows.push(Row {
        step: 0,
        c_train: f64::NAN,
        c_unlabeled: f64::NAN,
        c_holdout_before: f64::NAN,
        c_holdout_after: f64::NAN,
        test_metric: eval(&state).map_err(wrap)?,
    });
    on_eval(&rows[0]);
    for t in 1..=spec.steps {
        let b = sample_batches(&p.pools, &spec.train.batch, &mut state.rng_batches).map_err(wrap)?;
        let report = match &spec.l2i {
            Some(m) => l2i_train_step(model, &mut state, &b, &spec.train, m),
            None => baseline_step(model, &mut state, &b, &spec.train),
        };
        let mut row = match report {
            Ok(r) => row_from(t, &r),
            Err(Error::NonFinite(what)) => {
                log::warn!("seed {seed} step {t}: non-finite {what}; iteration skipped");
                state.step += 1;
                Row {
                    step: t,
                    c_train: f64::NAN,
                    c_unlabeled: f64::NAN,
                    c_holdout_before: f64::NAN,
                    c_holdout_after: f64::NAN,
                    test_metric: f64::NAN,
                }
            }
            Err(e) => return Err(wrap(e)),
        };
        if t % spec.eval_every == 0 || t == spec.steps {
            row.test_metric = eval(&state).map_err(wrap)?;
            on_eval(&row);
        }
        rows.push(row);
    }
    let final_metric = tail_median(&rows, spec.steps);
    Ok(RunRecord { seed, rows, final_metric })
}

/// Runs every seed in order.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    spec.seeds.iter().map(|&s| run_seed(spec, s)).collect()
}

/// Paired comparison of two arms on the final metric (lower is better).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSummary {
    pub seeds: Vec<u64>,
    pub finals_a: Vec<f64>,
    pub finals_b: Vec<f64>,
    /// Seeds where `a` is strictly better.
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
    pub mean_a: f64,
    pub sd_a: f64,
    pub mean_b: f64,
    pub sd_b: f64,
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

pub fn compare(a: &[RunRecord], b: &[RunRecord]) -> Result<ComparisonSummary> {
    let seeds: Vec<u64> = a.iter().map(|r| r.seed).collect();
    if seeds != b.iter().map(|r| r.seed).collect::<Vec<_>>() {
        return Err(Error::Config("compared runs use different seeds".into()));
    }
    let finals_a: Vec<f64> = a.iter().map(|r| r.final_metric).collect();
    let finals_b: Vec<f64> = b.iter().map(|r| r.final_metric).collect();
    let (mut wins_a, mut wins_b, mut ties) = (0, 0, 0);
    for (x, y) in finals_a.iter().zip(&finals_b) {
        if x < y {
            wins_a += 1;
        } else if y < x {
            wins_b += 1;
        } else {
            ties += 1;
        }
    }
    let (mean_a, sd_a) = mean_sd(&finals_a);
    let (mean_b, sd_b) = mean_sd(&finals_b);
    Ok(ComparisonSummary { seeds, finals_a, finals_b, wins_a, wins_b, ties, mean_a, sd_a, mean_b, sd_b })
}

#[cfg(test)]
mod tests;
