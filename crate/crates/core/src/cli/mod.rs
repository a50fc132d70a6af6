//! `sptcl` command-line interface.
//!
//! Every failure is reported as one line on stderr, `error[<category>]: <message>`,
//! with an exit code per category (see [`ErrorCategory`]).

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::datamodel::{Ablation, Format, Gamma, Hyperparams, KernelSpec, SyntheticSpec};
use crate::Error;

pub use config::{
    InputPaths, Manifest, ResolvedRun, RunConfig, NOISE_SEED_OFFSET, SYNTH_SEED_OFFSET,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Missing, unreadable or malformed input files.
    Input,
    /// Parameters violating their invariants.
    Validation,
    /// Factorization failure or non-finite values during the fit.
    Numerical,
    /// Outputs could not be written.
    Output,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Input => 2,
            Self::Validation => 3,
            Self::Numerical => 4,
            Self::Output => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Input => "input",
            Self::Validation => "validation",
            Self::Numerical => "numerical",
            Self::Output => "output",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: ErrorCategory,
    pub message: String,
}

impl CliError {
    pub fn new(category: ErrorCategory, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ErrorCategory::Input, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorCategory::Validation, message)
    }

    pub fn output(message: impl Into<String>) -> Self {
        Self::new(ErrorCategory::Output, message)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = self.message.replace(['\n', '\r'], " ");
        write!(f, "error[{}]: {}", self.category.name(), msg)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        use crate::error::{DataError, GraphError, KernelError, SolverError};
        let category = match &e {
            Error::Data(DataError::InvalidParameter(_))
            | Error::Data(DataError::TooFewClasses(_)) => ErrorCategory::Validation,
            Error::Data(_) | Error::Eval(_) => ErrorCategory::Input,
            Error::Graph(GraphError::InvalidK) => ErrorCategory::Validation,
            Error::Graph(_) => ErrorCategory::Input,
            Error::Kernel(KernelError::InvalidGamma(_) | KernelError::NotAKernel) => {
                ErrorCategory::Validation
            }
            Error::Kernel(_) => ErrorCategory::Input,
            Error::Solver(
                SolverError::DimensionMismatch { .. }
                | SolverError::MissingSourceLabels
                | SolverError::NoClasses { .. },
            ) => ErrorCategory::Input,
            Error::Solver(_) => ErrorCategory::Numerical,
        };
        Self::new(category, e.to_string())
    }
}

impl From<crate::error::DataError> for CliError {
    fn from(e: crate::error::DataError) -> Self {
        Error::from(e).into()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sptcl",
    version,
    about = "Self-paced transfer classifier learning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit on source + target files and write predictions, metrics and a manifest.
    Train(TrainArgs),
    /// Label new samples with a saved model.
    Predict(PredictArgs),
    /// Generate a synthetic partial domain adaptation task.
    Synth(SynthArgs),
    /// Corrupt a label file.
    Noise(NoiseArgs),
    /// Grid over eta / r / rho / p_noise / outlier count, averaged over seeds.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct HyperparamArgs {
    #[arg(long, default_value_t = 1.1)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long = "k", default_value_t = 5)]
    pub k: usize,
    /// none (linear solver), linear or rbf.
    #[arg(long, default_value = "none")]
    pub kernel: String,
    /// RBF bandwidth, a positive number or `median`.
    #[arg(long, default_value = "median")]
    pub gamma: String,
    #[arg(long, default_value_t = 10)]
    pub outer_iters: usize,
    #[arg(long, default_value_t = 10)]
    pub inner_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub inner_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub q_floor: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// full, no_spl or hard_label.
    #[arg(long, default_value = "full")]
    pub ablation: Ablation,
}

impl HyperparamArgs {
    pub fn to_hyperparams(&self) -> Result<Hyperparams, CliError> {
        let gamma = match self.gamma.as_str() {
            "median" => Gamma::Median,
            g => Gamma::Fixed(
                g.parse()
                    .map_err(|_| CliError::validation(format!("invalid --gamma {g:?}")))?,
            ),
        };
        let kernel = match self.kernel.as_str() {
            "none" => KernelSpec::None,
            "linear" => KernelSpec::Linear,
            "rbf" => KernelSpec::Rbf(gamma),
            k => return Err(CliError::validation(format!("unknown --kernel {k:?}"))),
        };
        let hp = Hyperparams {
            r: self.r,
            eta: self.eta,
            rho: self.rho,
            k_neighbors: self.k,
            kernel,
            outer_iters: self.outer_iters,
            inner_iters: self.inner_iters,
            inner_tol: self.inner_tol,
            q_floor: self.q_floor,
            seed: self.seed,
            ablation: self.ablation,
        };
        hp.validate()
            .map_err(|e| CliError::validation(e.to_string()))?;
        Ok(hp)
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub source_features: Option<PathBuf>,
    /// Training labels for the source (possibly already noisy).
    #[arg(long)]
    pub source_labels: Option<PathBuf>,
    #[arg(long)]
    pub target_features: Option<PathBuf>,
    /// Ground-truth target labels, used for metrics and `--keep-classes` only.
    #[arg(long)]
    pub target_labels: Option<PathBuf>,
    /// Clean source labels, used for source accuracy only.
    #[arg(long)]
    pub source_clean_labels: Option<PathBuf>,
    /// csv or binary; detected from the file contents when omitted.
    #[arg(long)]
    pub format: Option<Format>,
    /// Size of the source label space; defaults to max source label + 1.
    #[arg(long)]
    pub class_count: Option<usize>,
    /// Keep only target samples whose true label is listed (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub keep_classes: Option<Vec<usize>>,
    /// Scale every sample to unit L2 norm before fitting.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Rerun exactly the configuration recorded in a manifest.
    #[arg(long, conflicts_with_all = ["source_features", "target_features"])]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperparamArgs,
    /// Corrupt source labels with this probability before fitting.
    #[arg(long, default_value_t = 0.0)]
    pub p_noise: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also dump the target affinity graph as `i j value` lines.
    #[arg(long)]
    pub dump_graph: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub format: Option<Format>,
    /// Predicted labels, one per line.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV of class-probability columns, one sample per line.
    #[arg(long)]
    pub probs_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthSpecArgs {
    #[arg(long, default_value_t = 3)]
    pub shared: usize,
    #[arg(long, default_value_t = 3)]
    pub outliers: usize,
    #[arg(long, default_value_t = 100)]
    pub source_per_class: usize,
    #[arg(long, default_value_t = 50)]
    pub target_per_class: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 3.5)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_scale: f64,
    #[arg(long, default_value_t = 2.0)]
    pub shift: f64,
    #[arg(long, default_value_t = 0.0)]
    pub offset: f64,
}

impl SynthSpecArgs {
    pub fn to_spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            shared_classes: self.shared,
            outlier_classes: self.outliers,
            source_per_class: self.source_per_class,
            target_per_class: self.target_per_class,
            dim: self.dim,
            separation: self.separation,
            noise_scale: self.noise_scale,
            shift: self.shift,
            offset: self.offset,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub spec: SynthSpecArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub labels_in: PathBuf,
    #[arg(long)]
    pub class_count: usize,
    #[arg(long)]
    pub p_noise: f64,
    /// Run seed; the noise stream uses `seed + 1`, matching `train --p-noise`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub labels_out: PathBuf,
    /// Flipped mask, `1` where the label was replaced.
    #[arg(long)]
    pub mask_out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Use a generated task per seed instead of input files.
    #[arg(long)]
    pub synthetic: bool,
    #[command(flatten)]
    pub synth: SynthSpecArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub hyper: HyperparamArgs,
    #[arg(long = "grid-eta", value_delimiter = ',')]
    pub grid_eta: Vec<f64>,
    #[arg(long = "grid-r", value_delimiter = ',')]
    pub grid_r: Vec<f64>,
    #[arg(long = "grid-rho", value_delimiter = ',')]
    pub grid_rho: Vec<f64>,
    #[arg(long = "grid-p-noise", value_delimiter = ',')]
    pub grid_p_noise: Vec<f64>,
    /// Outlier class counts; requires `--synthetic`.
    #[arg(long = "grid-outliers", value_delimiter = ',')]
    pub grid_outliers: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 0.0)]
    pub p_noise: f64,
    /// Results table (CSV).
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let msg = rendered
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", CliError::validation(msg));
            return ErrorCategory::Validation.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.category.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train(a) => commands::cmd_train(&a),
        Command::Predict(a) => commands::cmd_predict(&a),
        Command::Synth(a) => commands::cmd_synth(&a),
        Command::Noise(a) => commands::cmd_noise(&a),
        Command::Sweep(a) => commands::cmd_sweep(&a),
    }
}
