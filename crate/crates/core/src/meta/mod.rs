//! The bilevel trainer: inner SGD unroll, hypergradients with respect to the
//! imputed labels, and the outer update in output or learnable-label mode.

mod config;
mod schedule;
mod trainer;
mod unroll;

pub use config::{BatchSizes, GradMode, HoldoutPolicy, LabelMode, MetaConfig, TrainConfig};
pub use schedule::LambdaSchedule;
pub use trainer::{
    baseline_step, error_rate, evaluate, evaluate_params, l2i_train_step, predicted_classes, sample_batches,
    target_classes, Batches, MetaStepReport, Pools, TrainerState,
};
pub use unroll::{
    inner_loop, inner_objective, meta_grad_approx, meta_grad_exact_l, meta_grad_exact_o, Holdout, InnerProblem,
    LabelGrad, UnrollTape,
};
