use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `W` is `m x C`, scores are `W^T X`.
    Linear,
    /// `W` is `n x C`, scores are `W^T K`.
    Kernel,
}

/// Optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub weights: DMatrix<f64>,
    /// Source selection, `v_i = 1` when `selected[i]`.
    pub selected: Vec<bool>,
    /// `C x n` class probabilities, source columns first.
    pub probs: DMatrix<f64>,
    pub lambda: f64,
    pub mode: Mode,
}

impl ModelState {
    pub fn n_source(&self) -> usize {
        self.selected.len()
    }

    pub fn selected_count(&self) -> usize {
        self.selected.iter().filter(|&&s| s).count()
    }

    /// Per-sample loss weights `u = [v, 1]`.
    pub fn sample_weights(&self) -> DVector<f64> {
        let n = self.probs.ncols();
        let ns = self.n_source();
        DVector::from_fn(n, |i, _| {
            if i >= ns || self.selected[i] {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// `F = P^r U` and the diagonal `s_ii = sum_c F_ci` feeding the W-step.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedLossTerms {
    pub f: DMatrix<f64>,
    pub s: DVector<f64>,
}

impl WeightedLossTerms {
    pub fn new(probs: &DMatrix<f64>, weights: &DVector<f64>, r: f64) -> Self {
        assert_eq!(probs.ncols(), weights.len(), "one weight per sample");
        let mut f = probs.map(|p| pow_r(p, r));
        for (mut col, &u) in f.column_iter_mut().zip(weights.iter()) {
            col *= u;
        }
        let s = DVector::from_iterator(f.ncols(), f.column_iter().map(|c| c.sum()));
        Self { f, s }
    }
}

/// `p^r`, exact for `r == 1`.
pub(crate) fn pow_r(p: f64, r: f64) -> f64 {
    if r == 1.0 {
        p
    } else {
        p.powf(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn excluded_and_empty_columns_have_zero_s() {
        let probs = DMatrix::from_row_slice(2, 3, &[1.0, 0.5, 0.0, 0.0, 0.5, 0.0]);
        let u = DVector::from_vec(vec![0.0, 1.0, 1.0]);
        let t = WeightedLossTerms::new(&probs, &u, 2.0);
        assert_eq!(t.s.as_slice(), &[0.0, 0.5, 0.0]);
        assert!(t.f.iter().all(|&v| v >= 0.0));
        assert_eq!(t.f[(0, 1)], 0.25);
    }

    #[test]
    fn prudent_weights() {
        let probs = DMatrix::from_column_slice(3, 1, &[0.8, 0.1, 0.1]);
        let t = WeightedLossTerms::new(&probs, &DVector::from_element(1, 1.0), 2.0);
        let want = [0.64, 0.01, 0.01];
        for (got, want) in t.f.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }
}
