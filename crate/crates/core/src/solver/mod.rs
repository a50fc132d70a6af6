//! The alternating optimizer: closed-form subproblem solvers for the
//! selection vector `v`, the class-probability matrix `P` and the weights
//! `W`, the full objective, the self-paced schedule and the outer/inner
//! fitting loop.

mod fit;
mod model;
mod objective;
mod problem;
mod schedule;
mod state;
mod steps;

use thiserror::Error;

pub use fit::{fit, fit_with, FitResult, IterationSnapshot, Truth};
pub use model::{Model, Prediction};
pub use objective::objective;
pub use problem::{Problem, KERNEL_SEED_OFFSET};
pub use schedule::PaceSchedule;
pub use state::{Mode, ModelState, WeightedLossTerms};
pub use steps::{
    argmax_columns, p_step, pace_lambda, pace_lambda_for_count, pace_select,
    per_example_source_loss, residuals, v_step, w_step_kernel, w_step_linear,
};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("source dataset must be fully labeled")]
    MissingSourceLabels,
    #[error("source has {source_classes} classes, but at least 1 is required")]
    NoClasses { source_classes: usize },
    #[error("Cholesky factorization failed: system is not positive definite")]
    NotPositiveDefinite,
    #[error("linear system is singular")]
    Singular,
    #[error("non-finite value produced by the {0}")]
    NonFinite(&'static str),
}
