use nalgebra::{DMatrix, DVector};

use super::steps::{manifold_gram, solve_kernel_system, solve_linear_system};
use super::{Mode, SolverError};
use crate::datamodel::{Dataset, Hyperparams, KernelSpec};
use crate::graph::{build_affinity, pad_laplacian, AffinityGraph, PaddedLaplacian};
use crate::kernel::{gram, GramMatrix};
use crate::Result;

/// Offset added to the run seed for the kernel bandwidth heuristic.
pub const KERNEL_SEED_OFFSET: u64 = 2;

/// Everything fixed for the duration of a fit: stacked features
/// `X = [Xs, Xt]`, the padded target Laplacian and, in kernel mode, the Gram
/// matrix with its Laplacian product cached.
#[derive(Debug, Clone)]
pub struct Problem {
    x: DMatrix<f64>,
    n_source: usize,
    class_count: usize,
    source_labels: Vec<usize>,
    graph: AffinityGraph,
    laplacian: PaddedLaplacian,
    system: System,
}

#[derive(Debug, Clone)]
enum System {
    Linear { manifold: DMatrix<f64> },
    Kernel { gram: GramMatrix, lk: DMatrix<f64> },
}

impl Problem {
    pub fn new(source: &Dataset, target: &Dataset, hp: &Hyperparams) -> Result<Self> {
        hp.validate()?;
        if source.dim() != target.dim() {
            return Err(SolverError::DimensionMismatch {
                what: "target feature dimension",
                expected: source.dim(),
                found: target.dim(),
            }
            .into());
        }
        let source_labels = source
            .dense_labels()
            .map_err(|_| SolverError::MissingSourceLabels)?;
        let class_count = source.class_count();
        if class_count == 0 {
            return Err(SolverError::NoClasses { source_classes: 0 }.into());
        }
        let (ns, nt) = (source.len(), target.len());
        let mut x = DMatrix::zeros(source.dim(), ns + nt);
        x.columns_mut(0, ns).copy_from(source.features());
        x.columns_mut(ns, nt).copy_from(target.features());

        let graph = build_affinity(target.features(), hp.k_neighbors)?;
        let laplacian = pad_laplacian(&graph, ns);
        let system = match hp.kernel {
            KernelSpec::None => System::Linear {
                manifold: manifold_gram(&x, &laplacian),
            },
            spec => {
                let gram = gram(&x, spec, hp.seed.wrapping_add(KERNEL_SEED_OFFSET))?;
                let lk = laplacian.mul(&gram.matrix);
                System::Kernel { gram, lk }
            }
        };
        Ok(Self {
            x,
            n_source: ns,
            class_count,
            source_labels,
            graph,
            laplacian,
            system,
        })
    }

    pub fn mode(&self) -> Mode {
        match self.system {
            System::Linear { .. } => Mode::Linear,
            System::Kernel { .. } => Mode::Kernel,
        }
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.x.ncols() - self.n_source
    }

    pub fn len(&self) -> usize {
        self.x.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.x.ncols() == 0
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Training labels for the source, as given (possibly noisy).
    pub fn source_labels(&self) -> &[usize] {
        &self.source_labels
    }

    pub fn graph(&self) -> &AffinityGraph {
        &self.graph
    }

    pub fn laplacian(&self) -> &PaddedLaplacian {
        &self.laplacian
    }

    pub fn gram(&self) -> Option<&GramMatrix> {
        match &self.system {
            System::Kernel { gram, .. } => Some(gram),
            System::Linear { .. } => None,
        }
    }

    /// Rows of `W` for this mode.
    pub fn weight_rows(&self) -> usize {
        match self.system {
            System::Linear { .. } => self.x.nrows(),
            System::Kernel { .. } => self.x.ncols(),
        }
    }

    /// Training scores `W^T X` or `W^T K`, `C x n`.
    pub fn scores(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.system {
            System::Linear { .. } => w.transpose() * &self.x,
            System::Kernel { gram, .. } => w.transpose() * &gram.matrix,
        }
    }

    /// Exact minimizer of the objective over `W` with `F`, `S` fixed.
    pub fn solve_weights(
        &self,
        f: &DMatrix<f64>,
        s: &DVector<f64>,
        hp: &Hyperparams,
    ) -> Result<DMatrix<f64>, SolverError> {
        match &self.system {
            System::Linear { manifold } => {
                solve_linear_system(&self.x, f, s, manifold, hp.eta, hp.rho)
            }
            System::Kernel { gram, lk } => {
                solve_kernel_system(&gram.matrix, lk, f, s, hp.eta, hp.rho)
            }
        }
    }

    /// `eta ||W||^2 + rho Tr(W^T X L X^T W)` (linear) or
    /// `Tr(W^T (eta K + rho K L K) W)` (kernel).
    pub fn regularizer(&self, w: &DMatrix<f64>, hp: &Hyperparams) -> f64 {
        match &self.system {
            System::Linear { manifold } => {
                hp.eta * w.norm_squared() + hp.rho * (w.transpose() * manifold * w).trace()
            }
            System::Kernel { gram, lk } => {
                let kw = &gram.matrix * w;
                hp.eta * w.dot(&kw) + hp.rho * kw.dot(&(lk * w))
            }
        }
    }
}
