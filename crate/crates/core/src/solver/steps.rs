//! Closed-form subproblem solvers.

use nalgebra::{DMatrix, DVector};

use super::state::pow_r;
use super::SolverError;
use crate::graph::PaddedLaplacian;

/// `Q[c, i] = ||scores_i - e_c||^2` for a `C x n` score matrix.
pub fn residuals(scores: &DMatrix<f64>) -> DMatrix<f64> {
    let (c, n) = scores.shape();
    let mut q = DMatrix::zeros(c, n);
    for i in 0..n {
        let col = scores.column(i);
        let sq = col.norm_squared();
        for k in 0..c {
            let s = col[k];
            // ||s||^2 - s_k^2 + (s_k - 1)^2, never negative up to rounding
            q[(k, i)] = (sq - s * s).max(0.0) + (s - 1.0) * (s - 1.0);
        }
    }
    q
}

/// `l_i = sum_c p_ci^r q_ci` over the first `n_source` columns.
pub fn per_example_source_loss(
    q: &DMatrix<f64>,
    probs: &DMatrix<f64>,
    r: f64,
    n_source: usize,
) -> Vec<f64> {
    (0..n_source)
        .map(|i| {
            probs
                .column(i)
                .iter()
                .zip(q.column(i).iter())
                .map(|(&p, &qc)| pow_r(p, r) * qc)
                .sum()
        })
        .collect()
}

/// `v_i = 1` iff `l_i < lambda`.
pub fn v_step(losses: &[f64], lambda: f64) -> Vec<bool> {
    losses.iter().map(|&l| l < lambda).collect()
}

/// Pace for keeping `ceil(tau * n)` examples.
pub fn pace_lambda(losses: &[f64], tau: f64) -> f64 {
    pace_lambda_for_count(losses, keep_count(tau, losses.len()))
}

fn keep_count(tau: f64, n: usize) -> usize {
    let tau = tau.clamp(0.0, 1.0);
    // absorb rounding in tau * n before taking the ceiling
    let c = (tau * n as f64 - 1e-9).ceil().max(0.0) as usize;
    c.min(n)
}

/// Pace that keeps the `count` smallest losses: 0 when `count == 0`,
/// `max + 1` when `count == n`, otherwise the midpoint of the `count`-th and
/// `count + 1`-th smallest losses.
pub fn pace_lambda_for_count(losses: &[f64], count: usize) -> f64 {
    let n = losses.len();
    if count == 0 || n == 0 {
        return 0.0;
    }
    let mut sorted = losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    if count >= n {
        return sorted[n - 1] + 1.0;
    }
    0.5 * (sorted[count - 1] + sorted[count])
}

/// Pace and selection keeping exactly `count` examples. When tied losses
/// straddle the pace the thresholded selection would miss `count`, so the
/// `count` smallest losses are taken in (loss, index) order instead.
pub fn pace_select(losses: &[f64], count: usize) -> (f64, Vec<bool>) {
    let lambda = pace_lambda_for_count(losses, count);
    let v = v_step(losses, lambda);
    let count = count.min(losses.len());
    if v.iter().filter(|&&s| s).count() == count {
        return (lambda, v);
    }
    let mut order: Vec<usize> = (0..losses.len()).collect();
    order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
    let mut v = vec![false; losses.len()];
    for &i in &order[..count] {
        v[i] = true;
    }
    (lambda, v)
}

/// Minimize `sum_c p_ci^r q_ci` over the simplex, independently per column.
///
/// `r == 1` assigns all mass to the smallest residual (lowest class on ties).
/// `r > 1` gives `p_ci ∝ q_ci^{-1/(r-1)}` with `q` floored at `q_floor`,
/// evaluated in log space.
pub fn p_step(q: &DMatrix<f64>, r: f64, q_floor: f64) -> DMatrix<f64> {
    let (c, n) = q.shape();
    let mut p = DMatrix::zeros(c, n);
    if c == 0 {
        return p;
    }
    if r == 1.0 {
        for i in 0..n {
            let best = argmin(q.column(i).iter().copied());
            p[(best, i)] = 1.0;
        }
        return p;
    }
    let expo = 1.0 / (r - 1.0);
    let mut logw = vec![0.0; c];
    for i in 0..n {
        for (k, lw) in logw.iter_mut().enumerate() {
            *lw = -expo * q[(k, i)].max(q_floor).ln();
        }
        let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = logw.iter().map(|&lw| (lw - top).exp()).sum();
        for (k, &lw) in logw.iter().enumerate() {
            p[(k, i)] = (lw - top).exp() / total;
        }
    }
    p
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, v) in values.enumerate() {
        if v < best.1 {
            best = (k, v);
        }
    }
    best.0
}

/// Row index of the largest entry in each column, lowest index on ties.
pub fn argmax_columns(scores: &DMatrix<f64>) -> Vec<usize> {
    scores
        .column_iter()
        .map(|col| {
            let mut best = (0, f64::NEG_INFINITY);
            for (k, &v) in col.iter().enumerate() {
                if v > best.1 {
                    best = (k, v);
                }
            }
            best.0
        })
        .collect()
}

fn check_shapes(
    n: usize,
    f: &DMatrix<f64>,
    s: &DVector<f64>,
    laplacian: &PaddedLaplacian,
) -> Result<(), SolverError> {
    let mismatch = |what, found| {
        Err(SolverError::DimensionMismatch {
            what,
            expected: n,
            found,
        })
    };
    if f.ncols() != n {
        return mismatch("F columns", f.ncols());
    }
    if s.len() != n {
        return mismatch("S diagonal", s.len());
    }
    if laplacian.len() != n {
        return mismatch("Laplacian size", laplacian.len());
    }
    Ok(())
}

/// `X L X^T` for the padded Laplacian, touching only target columns.
pub(crate) fn manifold_gram(x: &DMatrix<f64>, laplacian: &PaddedLaplacian) -> DMatrix<f64> {
    let ns = laplacian.n_source();
    let nt = laplacian.target_block().nrows();
    let xt = x.columns(ns, nt);
    let g = xt * laplacian.target_block() * xt.transpose();
    (&g + g.transpose()) * 0.5
}

/// Solve `(X (S + rho L) X^T + eta I) W = X F^T` by Cholesky.
pub fn w_step_linear(
    x: &DMatrix<f64>,
    f: &DMatrix<f64>,
    s: &DVector<f64>,
    laplacian: &PaddedLaplacian,
    eta: f64,
    rho: f64,
) -> Result<DMatrix<f64>, SolverError> {
    check_shapes(x.ncols(), f, s, laplacian)?;
    let manifold = manifold_gram(x, laplacian);
    solve_linear_system(x, f, s, &manifold, eta, rho)
}

pub(crate) fn solve_linear_system(
    x: &DMatrix<f64>,
    f: &DMatrix<f64>,
    s: &DVector<f64>,
    manifold: &DMatrix<f64>,
    eta: f64,
    rho: f64,
) -> Result<DMatrix<f64>, SolverError> {
    let m = x.nrows();
    let mut xs = x.clone();
    for (mut col, &si) in xs.column_iter_mut().zip(s.iter()) {
        col *= si;
    }
    let mut a = &xs * x.transpose() + manifold * rho;
    for i in 0..m {
        a[(i, i)] += eta;
    }
    let a = (&a + a.transpose()) * 0.5;
    let rhs = x * f.transpose();
    let chol = a.cholesky().ok_or(SolverError::NotPositiveDefinite)?;
    let w = chol.solve(&rhs);
    if w.iter().all(|v| v.is_finite()) {
        Ok(w)
    } else {
        Err(SolverError::NonFinite("linear W-step"))
    }
}

/// Solve `((S + rho L) K + eta I) W = F^T` by LU with partial pivoting.
pub fn w_step_kernel(
    k: &DMatrix<f64>,
    f: &DMatrix<f64>,
    s: &DVector<f64>,
    laplacian: &PaddedLaplacian,
    eta: f64,
    rho: f64,
) -> Result<DMatrix<f64>, SolverError> {
    check_shapes(k.ncols(), f, s, laplacian)?;
    let lk = laplacian.mul(k);
    solve_kernel_system(k, &lk, f, s, eta, rho)
}

pub(crate) fn solve_kernel_system(
    k: &DMatrix<f64>,
    lk: &DMatrix<f64>,
    f: &DMatrix<f64>,
    s: &DVector<f64>,
    eta: f64,
    rho: f64,
) -> Result<DMatrix<f64>, SolverError> {
    let n = k.nrows();
    let mut a = lk * rho;
    for i in 0..n {
        let si = s[i];
        if si != 0.0 {
            for j in 0..n {
                a[(i, j)] += si * k[(i, j)];
            }
        }
        a[(i, i)] += eta;
    }
    let w = a.lu().solve(&f.transpose()).ok_or(SolverError::Singular)?;
    if w.iter().all(|v| v.is_finite()) {
        Ok(w)
    } else {
        Err(SolverError::NonFinite("kernel W-step"))
    }
}
