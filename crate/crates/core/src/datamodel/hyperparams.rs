use serde::{Deserialize, Serialize};

use super::DataError;

/// RBF bandwidth: explicit `gamma` or the median pairwise-distance heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    Fixed(f64),
    Median,
}

/// `None` runs the primal (linear) solver; the other variants run the
/// kernelized solver over the given Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    #[default]
    None,
    Linear,
    Rbf(Gamma),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    #[default]
    Full,
    /// Keep every source example selected for the whole run.
    NoSpl,
    /// Hard (argmin) class assignments in place of the soft prudent loss.
    HardLabel,
}

impl std::str::FromStr for Ablation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Self::Full),
            "no_spl" | "no-spl" => Ok(Self::NoSpl),
            "hard_label" | "hard-label" => Ok(Self::HardLabel),
            _ => Err(format!(
                "unknown ablation {s:?} (expected full, no_spl, hard_label)"
            )),
        }
    }
}

/// Solver knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Exponent on class probabilities in the prudent loss, `r >= 1`.
    pub r: f64,
    /// Weight of the `||W||^2` complexity term.
    pub eta: f64,
    /// Weight of the target manifold term.
    pub rho: f64,
    pub k_neighbors: usize,
    pub kernel: KernelSpec,
    /// Length of the self-paced schedule.
    pub outer_iters: usize,
    /// Maximum W/P alternations per outer iteration.
    pub inner_iters: usize,
    /// Relative objective change below which the inner loop stops.
    pub inner_tol: f64,
    /// Floor applied to residuals before inverting them in the P-step.
    pub q_floor: f64,
    pub seed: u64,
    pub ablation: Ablation,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            r: 1.1,
            eta: 1.0,
            rho: 1.0,
            k_neighbors: 5,
            kernel: KernelSpec::None,
            outer_iters: 10,
            inner_iters: 10,
            inner_tol: 1e-5,
            q_floor: 1e-12,
            seed: 0,
            ablation: Ablation::Full,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |msg: String| Err(DataError::InvalidParameter(msg));
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return bad(format!("r must be >= 1, got {}", self.r));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be > 0, got {}", self.eta));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be >= 0, got {}", self.rho));
        }
        if self.k_neighbors < 1 {
            return bad("k must be >= 1".into());
        }
        if self.outer_iters < 2 {
            return bad(format!(
                "outer_iters must be >= 2, got {}",
                self.outer_iters
            ));
        }
        if self.inner_iters < 1 {
            return bad("inner_iters must be >= 1".into());
        }
        if self.inner_tol.is_nan() || self.inner_tol < 0.0 {
            return bad(format!("inner_tol must be >= 0, got {}", self.inner_tol));
        }
        if self.q_floor.is_nan() || self.q_floor <= 0.0 {
            return bad(format!("q_floor must be > 0, got {}", self.q_floor));
        }
        if let KernelSpec::Rbf(Gamma::Fixed(g)) = self.kernel {
            if !(g > 0.0 && g.is_finite()) {
                return bad(format!("rbf gamma must be > 0, got {g}"));
            }
        }
        Ok(())
    }

    /// Probability exponent actually used by the solver.
    pub fn effective_r(&self) -> f64 {
        match self.ablation {
            Ablation::HardLabel => 1.0,
            _ => self.r,
        }
    }
}
