//! Gram matrices for the kernelized solver.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{Gamma, KernelSpec};

/// Pairs sampled by the median bandwidth heuristic.
pub const MEDIAN_SAMPLE_PAIRS: usize = 2000;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("rbf gamma must be > 0, got {0}")]
    InvalidGamma(f64),
    #[error("median pairwise distance is zero; all sampled points coincide")]
    DegenerateMedian,
    #[error("kernel needs at least one sample")]
    Empty,
    #[error("kernel spec `none` does not define a Gram matrix")]
    NotAKernel,
    #[error("feature dimension mismatch: {expected} vs {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A kernel with every parameter resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolvedKernel {
    Linear,
    Rbf { gamma: f64 },
}

impl ResolvedKernel {
    /// Resolve a spec against data, running the median heuristic if asked.
    pub fn resolve(spec: KernelSpec, x: &DMatrix<f64>, seed: u64) -> Result<Self, KernelError> {
        match spec {
            KernelSpec::None => Err(KernelError::NotAKernel),
            KernelSpec::Linear => Ok(Self::Linear),
            KernelSpec::Rbf(Gamma::Fixed(g)) if g > 0.0 && g.is_finite() => {
                Ok(Self::Rbf { gamma: g })
            }
            KernelSpec::Rbf(Gamma::Fixed(g)) => Err(KernelError::InvalidGamma(g)),
            KernelSpec::Rbf(Gamma::Median) => {
                let med = median_pairwise_distance(x, seed)?;
                Ok(Self::Rbf {
                    gamma: 1.0 / (2.0 * med * med),
                })
            }
        }
    }

    fn eval(&self, a: nalgebra::DVectorView<'_, f64>, b: nalgebra::DVectorView<'_, f64>) -> f64 {
        match *self {
            Self::Linear => a.dot(&b),
            Self::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// `K[i, j] = k(a_i, b_j)` for columns of `a` and `b`.
    pub fn cross(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, KernelError> {
        if a.nrows() != b.nrows() {
            return Err(KernelError::DimensionMismatch {
                expected: a.nrows(),
                found: b.nrows(),
            });
        }
        if let Self::Linear = self {
            return Ok(a.transpose() * b);
        }
        let (na, nb) = (a.ncols(), b.ncols());
        let cols: Vec<Vec<f64>> = (0..nb)
            .into_par_iter()
            .map(|j| {
                (0..na)
                    .map(|i| self.eval(a.column(i), b.column(j)))
                    .collect()
            })
            .collect();
        Ok(DMatrix::from_fn(na, nb, |i, j| cols[j][i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub matrix: DMatrix<f64>,
    pub kernel: ResolvedKernel,
}

/// Gram matrix over the columns of `x`. `seed` drives pair sampling for the
/// median heuristic.
pub fn gram(x: &DMatrix<f64>, spec: KernelSpec, seed: u64) -> Result<GramMatrix, KernelError> {
    let n = x.ncols();
    if n == 0 {
        return Err(KernelError::Empty);
    }
    let kernel = ResolvedKernel::resolve(spec, x, seed)?;
    let mut matrix = match kernel {
        ResolvedKernel::Linear => x.transpose() * x,
        ResolvedKernel::Rbf { .. } => {
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..i)
                        .map(|j| kernel.eval(x.column(i), x.column(j)))
                        .collect()
                })
                .collect();
            let mut k = DMatrix::identity(n, n);
            for (i, row) in rows.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    k[(i, j)] = v;
                    k[(j, i)] = v;
                }
            }
            k
        }
    };
    // exact symmetry for the linear case too
    for i in 0..n {
        for j in 0..i {
            matrix[(j, i)] = matrix[(i, j)];
        }
    }
    Ok(GramMatrix { matrix, kernel })
}

/// Median Euclidean distance over all pairs, or over
/// [`MEDIAN_SAMPLE_PAIRS`] seeded random pairs when there are more.
pub fn median_pairwise_distance(x: &DMatrix<f64>, seed: u64) -> Result<f64, KernelError> {
    let n = x.ncols();
    let total = n * n.saturating_sub(1) / 2;
    let dist = |i: usize, j: usize| (x.column(i) - x.column(j)).norm();
    let mut d: Vec<f64> = if total <= MEDIAN_SAMPLE_PAIRS {
        (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| dist(i, j))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..MEDIAN_SAMPLE_PAIRS)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                dist(i, j)
            })
            .collect()
    };
    if d.is_empty() {
        return Err(KernelError::DegenerateMedian);
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let med = if d.len().is_multiple_of(2) {
        0.5 * (d[mid - 1] + d[mid])
    } else {
        d[mid]
    };
    if med > 0.0 {
        Ok(med)
    } else {
        Err(KernelError::DegenerateMedian)
    }
}
