//! Domain types, dataset I/O and the experimental-protocol harness.

mod dataset;
mod hyperparams;
pub mod io;
mod noise;
mod synth;

use std::path::PathBuf;

use thiserror::Error;

pub use dataset::{one_hot, subset_classes, Dataset};
pub use hyperparams::{Ablation, Gamma, Hyperparams, KernelSpec};
pub use io::Format;
pub use noise::{inject_label_noise, NoiseMode, NoiseSpec};
pub use synth::{generate_synthetic, SyntheticSpec, SyntheticTask};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// `row` and `col` are 1-based line and field positions.
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("cannot parse {text:?} at row {row}, column {col}")]
    Parse {
        row: usize,
        col: usize,
        text: String,
    },
    #[error("row {row} has {found} columns, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("file truncated: expected {expected} bytes of payload, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("dataset must have at least one sample and one feature (got {m}x{n})")]
    Empty { m: usize, n: usize },
    #[error("label {label} at index {index} outside [0, {class_count})")]
    ClassOutOfRange {
        index: usize,
        label: i64,
        class_count: usize,
    },
    #[error("expected {expected} labels, found {found}")]
    LabelCountMismatch { expected: usize, found: usize },
    #[error("dataset has no labels")]
    MissingLabels,
    #[error("sample {index} is unlabeled")]
    Unlabeled { index: usize },
    #[error("class subset is empty")]
    EmptySubset,
    #[error("no samples left after subsetting")]
    EmptyResult,
    #[error("label noise with p_noise > 0 needs at least 2 classes (got {0})")]
    TooFewClasses(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
