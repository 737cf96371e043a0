use alloc::format;

use super::LambdaSchedule;
use crate::impute::{ConsistencyLoss, Imputer, ImputerKind};
use crate::netgrad::{AdamHyper, LossKind, Mlp};
use crate::{Error, Result};

/// How the missing labels enter the outer objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// `z` is the imputer's output; the meta gradient flows into `θ` through `∂z/∂θ`.
    Output,
    /// `z` is a free variable updated by the meta gradient, then the model is refit to it.
    Learnable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradMode {
    /// Second-order products through the full unrolled inner loop.
    Exact,
    /// Last-layer feature-similarity formula.
    Approx,
}

/// Where hold-out batches are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoldoutPolicy {
    /// Same labeled pool as training, drawn independently.
    Joint,
    /// A disjoint, class-stratified part of the labeled data.
    Separate,
}

impl core::str::FromStr for LabelMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "output" | "O" | "o" => Ok(LabelMode::Output),
            "learnable" | "L" | "l" => Ok(LabelMode::Learnable),
            _ => Err(Error::Config(format!("unknown label_mode `{s}` (expected output or learnable)"))),
        }
    }
}

impl core::str::FromStr for GradMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(GradMode::Exact),
            "approx" => Ok(GradMode::Approx),
            _ => Err(Error::Config(format!("unknown grad_mode `{s}` (expected exact or approx)"))),
        }
    }
}

impl core::str::FromStr for HoldoutPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(HoldoutPolicy::Joint),
            "separate" => Ok(HoldoutPolicy::Separate),
            _ => Err(Error::Config(format!("unknown holdout policy `{s}` (expected joint or separate)"))),
        }
    }
}

impl LabelMode {
    pub fn name(self) -> &'static str {
        match self {
            LabelMode::Output => "output",
            LabelMode::Learnable => "learnable",
        }
    }
}

impl GradMode {
    pub fn name(self) -> &'static str {
        match self {
            GradMode::Exact => "exact",
            GradMode::Approx => "approx",
        }
    }
}

impl HoldoutPolicy {
    pub fn name(self) -> &'static str {
        match self {
            HoldoutPolicy::Joint => "joint",
            HoldoutPolicy::Separate => "separate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchSizes {
    pub labeled: usize,
    pub unlabeled: usize,
    pub holdout: usize,
}

/// Everything a plain semi-supervised step needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub supervised: LossKind,
    /// `None` trains on labeled data only.
    pub imputer: Option<Imputer>,
    pub consistency: ConsistencyLoss,
    pub adam: AdamHyper,
    pub lambda: LambdaSchedule,
    /// Decay of the evaluation EMA.
    pub ema_alpha: f64,
    pub batch: BatchSizes,
}

impl TrainConfig {
    pub fn validate(&self, model: &Mlp) -> Result<()> {
        self.supervised.check_supervised(model.task())?;
        self.consistency.validate(model)?;
        self.adam.validate()?;
        self.lambda.validate()?;
        if !(0.0..=1.0).contains(&self.ema_alpha) {
            return Err(Error::invalid("ema_alpha", "must lie in [0, 1]"));
        }
        if self.batch.labeled == 0 {
            return Err(Error::invalid("labeled_batch", "must be at least 1"));
        }
        if let Some(imp) = &self.imputer {
            match &imp.kind {
                // the teacher is seeded from the student when training starts
                ImputerKind::MeanTeacher { alpha, .. } if !(0.0..=1.0).contains(alpha) => {
                    return Err(Error::invalid("alpha", "must lie in [0, 1]"));
                }
                ImputerKind::MeanTeacher { .. } => imp.transform.validate()?,
                _ => imp.validate(model)?,
            }
        }
        Ok(())
    }
}

/// Settings of the bilevel update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetaConfig {
    /// Inner SGD learning rate.
    pub eta_theta: f64,
    /// Step size on learnable labels.
    pub eta_z: f64,
    pub inner_steps: usize,
    pub label_mode: LabelMode,
    pub grad_mode: GradMode,
    pub holdout: HoldoutPolicy,
    /// Give the outer update its own Adam moments instead of sharing the main ones.
    pub separate_outer_adam: bool,
    /// Add `∇C^T(θ̂)` to the outer gradient.
    pub outer_includes_supervised: bool,
    /// Use weight 1 on the unlabeled term inside the inner loop, whatever `λ(t)` is.
    pub literal_inner_lambda: bool,
}

impl Default for MetaConfig {
    fn default() -> Self {
        Self {
            eta_theta: 0.1,
            eta_z: 0.1,
            inner_steps: 1,
            label_mode: LabelMode::Output,
            grad_mode: GradMode::Exact,
            holdout: HoldoutPolicy::Joint,
            separate_outer_adam: false,
            outer_includes_supervised: false,
            literal_inner_lambda: false,
        }
    }
}

impl MetaConfig {
    pub fn validate(&self, train: &TrainConfig) -> Result<()> {
        if !(self.eta_theta > 0.0) || !self.eta_theta.is_finite() {
            return Err(Error::invalid("eta_theta", "must be positive"));
        }
        if self.label_mode == LabelMode::Learnable && (!(self.eta_z > 0.0) || !self.eta_z.is_finite()) {
            return Err(Error::invalid("eta_z", "must be positive"));
        }
        if self.inner_steps == 0 {
            return Err(Error::invalid("inner_steps", "must be at least 1"));
        }
        if train.batch.holdout == 0 {
            return Err(Error::invalid("holdout_batch", "must be at least 1"));
        }
        let Some(imp) = &train.imputer else {
            return Err(Error::Config("the bilevel update needs an imputer".into()));
        };
        if self.label_mode == LabelMode::Output && !imp.kind.is_differentiable() {
            return Err(Error::Config(format!(
                "imputer {} is not differentiable in θ; label_mode=output is unavailable",
                imp.kind.name()
            )));
        }
        Ok(())
    }
}
