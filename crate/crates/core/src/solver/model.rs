use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::steps::{argmax_columns, p_step, residuals};
use super::{Mode, SolverError};
use crate::kernel::ResolvedKernel;

/// A fitted classifier that can score new samples.
///
/// Kernel models carry their training features, since scoring a new sample
/// needs its kernel values against every training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub weights: DMatrix<f64>,
    pub class_count: usize,
    pub dim: usize,
    /// Exponent used for the probability columns reported by `predict`.
    pub r: f64,
    pub q_floor: f64,
    pub kernel: Option<KernelExpansion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelExpansion {
    pub kernel: ResolvedKernel,
    pub train_features: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    /// `C x n` class probabilities from the P-step rule on the residuals.
    pub probabilities: DMatrix<f64>,
    pub scores: DMatrix<f64>,
}

impl Model {
    pub fn mode(&self) -> Mode {
        if self.kernel.is_some() {
            Mode::Kernel
        } else {
            Mode::Linear
        }
    }

    /// Score and label the columns of `x`.
    pub fn predict(&self, x: &DMatrix<f64>) -> crate::Result<Prediction> {
        if x.nrows() != self.dim {
            return Err(SolverError::DimensionMismatch {
                what: "feature dimension",
                expected: self.dim,
                found: x.nrows(),
            }
            .into());
        }
        match &self.kernel {
            None => Ok(self.predict_scores(self.weights.transpose() * x)),
            Some(ex) => {
                let k_new = ex.kernel.cross(&ex.train_features, x)?;
                self.predict_from_kernel(&k_new)
            }
        }
    }

    /// Score from precomputed kernel values `K_new` (`n_train x n_new`).
    pub fn predict_from_kernel(&self, k_new: &DMatrix<f64>) -> crate::Result<Prediction> {
        if k_new.nrows() != self.weights.nrows() {
            return Err(SolverError::DimensionMismatch {
                what: "kernel rows",
                expected: self.weights.nrows(),
                found: k_new.nrows(),
            }
            .into());
        }
        Ok(self.predict_scores(self.weights.transpose() * k_new))
    }

    fn predict_scores(&self, scores: DMatrix<f64>) -> Prediction {
        let probabilities = p_step(&residuals(&scores), self.r, self.q_floor);
        Prediction {
            labels: argmax_columns(&scores),
            probabilities,
            scores,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(weights: DMatrix<f64>) -> Model {
        let (dim, class_count) = weights.shape();
        Model {
            weights,
            class_count,
            dim,
            r: 2.0,
            q_floor: 1e-12,
            kernel: None,
        }
    }

    #[test]
    fn identity_weights() {
        let m = linear(DMatrix::identity(3, 3));
        let x = DMatrix::from_column_slice(3, 1, &[0., 0., 1.]);
        let p = m.predict(&x).unwrap();
        assert_eq!(p.labels, vec![2]);
        assert!((p.probabilities.column(0).sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_and_dominance() {
        let m = linear(DMatrix::identity(3, 3));
        let x = DMatrix::from_column_slice(3, 2, &[0., 1., 1., 5., 1., 1.]);
        assert_eq!(m.predict(&x).unwrap().labels, vec![1, 0]);
    }

    #[test]
    fn dimension_checked() {
        let m = linear(DMatrix::identity(3, 2));
        assert!(m.predict(&DMatrix::zeros(2, 1)).is_err());
    }
}
