use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

/// Gaussian-cluster stand-in for a partial domain adaptation task.
///
/// Classes `0..shared_classes` appear in both domains; the next
/// `outlier_classes` appear only in the source. Target samples are drawn
/// from the same class clusters translated by a common vector of length
/// `shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub shared_classes: usize,
    pub outlier_classes: usize,
    pub source_per_class: usize,
    pub target_per_class: usize,
    pub dim: usize,
    /// Distance of each class center from the shared base point.
    pub separation: f64,
    /// Per-coordinate standard deviation within a class.
    pub noise_scale: f64,
    /// Length of the source-to-target mean shift.
    pub shift: f64,
    /// Norm of the base point every class center is placed around.
    pub offset: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            shared_classes: 3,
            outlier_classes: 3,
            source_per_class: 100,
            target_per_class: 50,
            dim: 16,
            separation: 3.5,
            noise_scale: 1.0,
            shift: 2.0,
            offset: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn class_count(&self) -> usize {
        self.shared_classes + self.outlier_classes
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::InvalidParameter(m.to_string()));
        if self.shared_classes < 1 {
            return bad("shared_classes must be >= 1");
        }
        if self.source_per_class < 1 || self.target_per_class < 1 {
            return bad("per-class counts must be >= 1");
        }
        if self.dim < 1 {
            return bad("dim must be >= 1");
        }
        if !(self.separation > 0.0 && self.noise_scale > 0.0) {
            return bad("separation and noise_scale must be > 0");
        }
        if !(self.shift >= 0.0 && self.offset >= 0.0) {
            return bad("shift and offset must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    /// Clean labels over all `shared + outlier` classes.
    pub source: Dataset,
    /// Unlabeled target features.
    pub target: Dataset,
    /// Ground truth for the target, a subset of `0..shared_classes`.
    pub true_target_labels: Vec<usize>,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticTask, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = spec.dim;
    let gauss = |rng: &mut ChaCha8Rng| -> DVector<f64> {
        DVector::from_fn(m, |_, _| StandardNormal.sample(rng))
    };
    let unit = |v: DVector<f64>| {
        let n = v.norm();
        if n > 0.0 {
            v / n
        } else {
            v
        }
    };

    let base = unit(gauss(&mut rng)) * spec.offset;
    let centers: Vec<DVector<f64>> = (0..spec.class_count())
        .map(|_| &base + unit(gauss(&mut rng)) * spec.separation)
        .collect();
    let shift = unit(gauss(&mut rng)) * spec.shift;

    let draw = |count: usize, classes: usize, offset: &DVector<f64>, rng: &mut ChaCha8Rng| {
        let mut cols = Vec::with_capacity(count * classes);
        let mut labels = Vec::with_capacity(count * classes);
        for (c, center) in centers.iter().enumerate().take(classes) {
            for _ in 0..count {
                cols.push(center + offset + gauss(rng) * spec.noise_scale);
                labels.push(c);
            }
        }
        (DMatrix::from_columns(&cols), labels)
    };
    let (xs, ys) = draw(
        spec.source_per_class,
        spec.class_count(),
        &DVector::zeros(m),
        &mut rng,
    );
    let (xt, yt) = draw(spec.target_per_class, spec.shared_classes, &shift, &mut rng);

    let source = Dataset::new(xs)?.with_dense_labels(&ys, Some(spec.class_count()))?;
    let target = Dataset::new(xt)?;
    Ok(SyntheticTask {
        source,
        target,
        true_target_labels: yt,
    })
}
