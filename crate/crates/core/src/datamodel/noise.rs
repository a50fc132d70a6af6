use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Replacement drawn uniformly from the `C - 1` classes other than the true one.
    #[default]
    UniformExcludingTrue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub p_noise: f64,
    #[serde(default)]
    pub mode: NoiseMode,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(p_noise: f64, seed: u64) -> Self {
        Self {
            p_noise,
            mode: NoiseMode::UniformExcludingTrue,
            seed,
        }
    }
}

/// Corrupt each label independently with probability `p_noise`.
///
/// Returns the noisy labels and a mask with `true` where a label was replaced.
/// A replaced label never equals the original.
pub fn inject_label_noise(
    labels: &[usize],
    class_count: usize,
    spec: &NoiseSpec,
) -> Result<(Vec<usize>, Vec<bool>), DataError> {
    if !(0.0..=1.0).contains(&spec.p_noise) {
        return Err(DataError::InvalidParameter(format!(
            "p_noise must be in [0, 1], got {}",
            spec.p_noise
        )));
    }
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= class_count) {
        return Err(DataError::ClassOutOfRange {
            index,
            label: label as i64,
            class_count,
        });
    }
    if spec.p_noise > 0.0 && class_count < 2 {
        return Err(DataError::TooFewClasses(class_count));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut noisy = Vec::with_capacity(labels.len());
    let mut flipped = Vec::with_capacity(labels.len());
    for &y in labels {
        if rng.random_bool(spec.p_noise) {
            let k = rng.random_range(0..class_count - 1);
            noisy.push(if k >= y { k + 1 } else { k });
            flipped.push(true);
        } else {
            noisy.push(y);
            flipped.push(false);
        }
    }
    Ok((noisy, flipped))
}
