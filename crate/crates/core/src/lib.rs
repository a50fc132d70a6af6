//! Self-paced transfer classifier learning (SP-TCL) for weakly-supervised
//! partial domain adaptation.
//!
//! A joint linear (or kernel) classifier is fit on a noisy-labeled source set
//! and an unlabeled target set by alternating closed-form updates of the
//! weights, the soft class-probability matrix and the binary source selection
//! vector. Source examples are excluded on a self-paced schedule until the
//! classifier is fit to target structure alone.
//!
//! Layout:
//! - [`datamodel`]: datasets, hyperparameters, file formats, noise injection,
//!   class subsetting and synthetic task generation.
//! - [`graph`]: cosine kNN affinity and normalized Laplacian over target samples.
//! - [`kernel`]: Gram matrices for the kernelized solver.
//! - [`solver`]: subproblem solvers, objective, pace schedule, `fit` and prediction.
//! - [`eval`]: accuracy, the 1NN baseline and per-iteration diagnostics.
//! - [`cli`]: the `sptcl` command-line front end.

pub mod cli;
pub mod datamodel;
pub mod error;
pub mod eval;
pub mod graph;
pub mod kernel;
pub mod solver;

pub use datamodel::{Ablation, Dataset, Gamma, Hyperparams, KernelSpec, NoiseSpec, SyntheticSpec};
pub use error::{Error, Result};
pub use eval::IterationRecord;
pub use solver::{fit, FitResult, Model};
