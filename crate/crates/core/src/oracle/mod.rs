//! Independent references for testing: central finite differences and the
//! closed-form hypergradients of a one-layer network.
//!
//! Nothing here calls into [`crate::netgrad`]; the one-layer formulas are
//! plain scalar loops so that agreement with the library is evidence rather
//! than a tautology.

mod finite;
mod one_layer;

pub use finite::{finite_diff, finite_diff_richardson, max_rel_err};
pub use one_layer::{
    analytic_grad_theta_binary, analytic_grad_theta_regression, analytic_grad_z_binary, analytic_grad_z_regression,
    holdout_loss_binary, holdout_loss_regression, imputed_label_binary, imputed_label_regression, theta_star_binary,
    theta_star_regression, OneLayerInstance, Reduction,
};
