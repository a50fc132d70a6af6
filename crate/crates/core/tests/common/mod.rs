//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sptcl::datamodel::{generate_synthetic, inject_label_noise};
use sptcl::{Dataset, NoiseSpec, SyntheticSpec};

/// `sum_c p_c^r q_c`.
pub fn column_loss(p: &[f64], q: &[f64], r: f64) -> f64 {
    p.iter().zip(q).map(|(&p, &q)| p.powf(r) * q).sum()
}

/// Squared distance from a score vector to each one-hot target.
pub fn residuals_naive(scores: &[f64]) -> Vec<f64> {
    (0..scores.len())
        .map(|c| {
            scores
                .iter()
                .enumerate()
                .map(|(k, &s)| {
                    let e = if k == c { 1.0 } else { 0.0 };
                    (s - e) * (s - e)
                })
                .sum()
        })
        .collect()
}

/// Every weak composition of `total` into `parts` non-negative integers.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Minimum of `sum_c p_c^r q_c` over the simplex: a uniform grid followed by
/// pairwise mass transfers with a shrinking step.
pub fn simplex_min_search(q: &[f64], r: f64) -> f64 {
    let c = q.len();
    let n = match c {
        1 => 1,
        2 => 400,
        3 => 80,
        4 => 30,
        _ => 16,
    };
    let mut best_p = vec![1.0 / c as f64; c];
    let mut best = column_loss(&best_p, q, r);
    for comp in compositions(n, c) {
        let p: Vec<f64> = comp.iter().map(|&k| k as f64 / n as f64).collect();
        let v = column_loss(&p, q, r);
        if v < best {
            best = v;
            best_p = p;
        }
    }
    let mut step = 1.0 / n as f64;
    while step > 1e-14 {
        let mut improved = true;
        while improved {
            improved = false;
            for a in 0..c {
                for b in 0..c {
                    if a == b {
                        continue;
                    }
                    let t = step.min(best_p[a]);
                    if t <= 0.0 {
                        continue;
                    }
                    let mut p = best_p.clone();
                    p[a] -= t;
                    p[b] += t;
                    let v = column_loss(&p, q, r);
                    if v < best {
                        best = v;
                        best_p = p;
                        improved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }
    best
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Column-stochastic `C x n` matrix with strictly positive entries.
pub fn random_simplex(rng: &mut ChaCha8Rng, c: usize, n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::from_fn(c, n, |_, _| rng.random_range(0.05..1.0));
    for mut col in p.column_iter_mut() {
        let s = col.sum();
        col /= s;
    }
    p
}

/// Euclidean 1NN labels, lowest source index on ties.
pub fn nearest_neighbor_labels(xs: &DMatrix<f64>, ys: &[usize], xt: &DMatrix<f64>) -> Vec<usize> {
    (0..xt.ncols())
        .map(|j| {
            let mut best = (usize::MAX, f64::INFINITY);
            for i in 0..xs.ncols() {
                let d = (xs.column(i) - xt.column(j)).norm_squared();
                if d < best.1 {
                    best = (i, d);
                }
            }
            ys[best.0]
        })
        .collect()
}

pub fn fraction_equal(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

/// A synthetic task with corrupted source labels.
pub struct NoisyTask {
    pub source: Dataset,
    pub target: Dataset,
    pub clean: Vec<usize>,
    pub truth: Vec<usize>,
}

pub fn noisy_task(spec: &SyntheticSpec, p_noise: f64, noise_seed: u64) -> NoisyTask {
    let task = generate_synthetic(spec).unwrap();
    let clean = task.source.dense_labels().unwrap();
    let c = spec.class_count();
    let (noisy, _) = inject_label_noise(&clean, c, &NoiseSpec::new(p_noise, noise_seed)).unwrap();
    NoisyTask {
        source: task.source.with_dense_labels(&noisy, Some(c)).unwrap(),
        target: task.target,
        clean,
        truth: task.true_target_labels,
    }
}
