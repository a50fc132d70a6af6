use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::datamodel::io::{load_features, load_labels};
use crate::datamodel::{
    inject_label_noise, subset_classes, Dataset, Format, Hyperparams, NoiseSpec,
};
use crate::kernel::ResolvedKernel;

/// Role offsets added to the run seed. The kernel offset lives with the solver
/// (`solver::KERNEL_SEED_OFFSET`).
pub const SYNTH_SEED_OFFSET: u64 = 0;
pub const NOISE_SEED_OFFSET: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputPaths {
    pub source_features: PathBuf,
    pub source_labels: PathBuf,
    pub target_features: PathBuf,
    pub target_labels: Option<PathBuf>,
    pub source_clean_labels: Option<PathBuf>,
}

/// Everything needed to reproduce a `train` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub inputs: InputPaths,
    pub format: Option<Format>,
    pub class_count: Option<usize>,
    pub keep_classes: Option<Vec<usize>>,
    pub normalize: bool,
    pub hyperparams: Hyperparams,
    pub p_noise: f64,
    pub out_dir: PathBuf,
}

/// Values derived while preparing a run, echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRun {
    pub n_source: usize,
    pub n_target: usize,
    pub dim: usize,
    pub class_count: usize,
    pub noise_seed: u64,
    pub kernel_seed: u64,
    pub flipped_count: usize,
    pub kernel: Option<ResolvedKernel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config: RunConfig,
    pub resolved: ResolvedRun,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: invalid manifest: {e}", path.display())))
    }
}

/// Data ready to fit.
pub struct PreparedRun {
    /// Source with training (possibly corrupted) labels.
    pub source: Dataset,
    pub target: Dataset,
    pub target_truth: Option<Vec<usize>>,
    pub source_clean: Option<Vec<usize>>,
    pub class_count: usize,
    pub flipped_count: usize,
}

impl RunConfig {
    /// Parameter checks that need no data.
    pub fn validate(&self) -> Result<(), CliError> {
        self.hyperparams
            .validate()
            .map_err(|e| CliError::validation(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.p_noise) {
            return Err(CliError::validation(format!(
                "p_noise must be in [0, 1], got {}",
                self.p_noise
            )));
        }
        if matches!(&self.keep_classes, Some(k) if k.is_empty()) {
            return Err(CliError::validation("--keep-classes is empty"));
        }
        if self.keep_classes.is_some() && self.inputs.target_labels.is_none() {
            return Err(CliError::validation("--keep-classes needs --target-labels"));
        }
        Ok(())
    }

    pub fn noise_seed(&self) -> u64 {
        self.hyperparams.seed.wrapping_add(NOISE_SEED_OFFSET)
    }

    /// Make every input path absolute so a manifest can be replayed from any
    /// working directory.
    pub fn canonicalize_inputs(&mut self) -> Result<(), CliError> {
        let canon = |p: &mut PathBuf| -> Result<(), CliError> {
            *p = p
                .canonicalize()
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            Ok(())
        };
        let inputs = &mut self.inputs;
        canon(&mut inputs.source_features)?;
        canon(&mut inputs.source_labels)?;
        canon(&mut inputs.target_features)?;
        if let Some(p) = inputs.target_labels.as_mut() {
            canon(p)?;
        }
        if let Some(p) = inputs.source_clean_labels.as_mut() {
            canon(p)?;
        }
        Ok(())
    }

    pub fn prepare(&self) -> Result<PreparedRun, CliError> {
        self.validate()?;
        let inputs = &self.inputs;
        let mut source = load(&inputs.source_features, self.format)?;
        let mut target = load(&inputs.target_features, self.format)?;
        let given = dense(
            load_label_file(&inputs.source_labels, self.format)?,
            "source labels",
        )?;
        let class_count = self
            .class_count
            .unwrap_or_else(|| given.iter().max().map_or(0, |m| m + 1));
        source = source.with_dense_labels(&given, Some(class_count))?;

        let mut target_truth = match &inputs.target_labels {
            Some(p) => Some(dense(load_label_file(p, self.format)?, "target labels")?),
            None => None,
        };
        if let Some(keep) = &self.keep_classes {
            let truth = target_truth.as_ref().expect("validated");
            let labeled = target.with_dense_labels(truth, Some(class_count))?;
            let keep: BTreeSet<usize> = keep.iter().copied().collect();
            target = subset_classes(&labeled, &keep)?;
            target_truth = Some(target.dense_labels()?);
        }
        if self.normalize {
            source = source.l2_normalized();
            target = target.l2_normalized();
        }

        let mut source_clean = match &inputs.source_clean_labels {
            Some(p) => Some(dense(
                load_label_file(p, self.format)?,
                "clean source labels",
            )?),
            None => None,
        };
        let mut flipped_count = 0;
        if self.p_noise > 0.0 {
            let spec = NoiseSpec::new(self.p_noise, self.noise_seed());
            let (noisy, mask) = inject_label_noise(&given, class_count, &spec)?;
            flipped_count = mask.iter().filter(|&&f| f).count();
            source = source.with_dense_labels(&noisy, Some(class_count))?;
            source_clean.get_or_insert(given);
        }
        Ok(PreparedRun {
            source,
            target,
            target_truth,
            source_clean,
            class_count,
            flipped_count,
        })
    }
}

fn resolve_format(path: &Path, format: Option<Format>) -> Result<Format, CliError> {
    match format {
        Some(f) => Ok(f),
        None => Ok(Format::detect(path)?),
    }
}

fn load(path: &Path, format: Option<Format>) -> Result<Dataset, CliError> {
    Ok(load_features(path, resolve_format(path, format)?)?)
}

pub(super) fn load_label_file(
    path: &Path,
    format: Option<Format>,
) -> Result<Vec<Option<usize>>, CliError> {
    Ok(load_labels(path, resolve_format(path, format)?)?)
}

fn dense(labels: Vec<Option<usize>>, what: &str) -> Result<Vec<usize>, CliError> {
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| CliError::input(format!("{what}: sample {i} is unlabeled"))))
        .collect()
}
