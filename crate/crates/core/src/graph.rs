//! Cosine kNN affinity over target samples and its normalized Laplacian.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("sample {0} has zero norm; cosine similarity is undefined")]
    ZeroNorm(usize),
    #[error("k must be >= 1")]
    InvalidK,
    #[error("graph needs at least one sample")]
    Empty,
}

/// Symmetric, non-negative affinity with zero diagonal, stored as sorted
/// adjacency lists, plus degrees and the dense normalized Laplacian
/// `D^{-1/2} (D - M) D^{-1/2}`. Rows and columns of isolated nodes are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    adjacency: Vec<Vec<(usize, f64)>>,
    degrees: DVector<f64>,
    laplacian: DMatrix<f64>,
}

impl AffinityGraph {
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Nonzero neighbors of node `i`, sorted by index.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn affinity_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.adjacency.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] = w;
            }
        }
        m
    }

    pub fn degrees(&self) -> &DVector<f64> {
        &self.degrees
    }

    /// Unnormalized `D - M`.
    pub fn combinatorial_laplacian(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.degrees) - self.affinity_dense()
    }

    pub fn normalized_laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// Coordinate-list dump, one `i j value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, row) in self.adjacency.iter().enumerate() {
            for &(j, w) in row {
                writeln!(out, "{i} {j} {w:e}")?;
            }
        }
        Ok(())
    }
}

/// `diag(0_{ns x ns}, L_norm)` over the stacked `[source, target]` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedLaplacian {
    n_source: usize,
    target: DMatrix<f64>,
}

impl PaddedLaplacian {
    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn len(&self) -> usize {
        self.n_source + self.target.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The bottom-right target block.
    pub fn target_block(&self) -> &DMatrix<f64> {
        &self.target
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut out = DMatrix::zeros(n, n);
        let nt = self.target.nrows();
        out.view_mut((self.n_source, self.n_source), (nt, nt))
            .copy_from(&self.target);
        out
    }

    /// `L * B` without forming the padded matrix.
    pub fn mul(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.len(), "padded laplacian dimension mismatch");
        let ns = self.n_source;
        let nt = self.target.nrows();
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        let prod = &self.target * b.rows(ns, nt);
        out.rows_mut(ns, nt).copy_from(&prod);
        out
    }
}

/// Build the OR-rule cosine kNN graph over the columns of `xt`.
///
/// Neighbors are ranked by cosine similarity, descending, with ties to the
/// lower index; a node is never its own neighbor. Edge weights are cosine
/// similarities clamped to `[0, 1]`.
pub fn build_affinity(xt: &DMatrix<f64>, k: usize) -> Result<AffinityGraph, GraphError> {
    let n = xt.ncols();
    if n == 0 {
        return Err(GraphError::Empty);
    }
    if k == 0 {
        return Err(GraphError::InvalidK);
    }
    let norms: Vec<f64> = xt.column_iter().map(|c| c.norm()).collect();
    if let Some(i) = norms.iter().position(|&v| v == 0.0) {
        return Err(GraphError::ZeroNorm(i));
    }
    let mut unit = xt.clone();
    for (mut col, &norm) in unit.column_iter_mut().zip(&norms) {
        col /= norm;
    }
    let cos = unit.transpose() * &unit;

    let mut edge = vec![vec![false; n]; n];
    for (i, nbrs) in nearest_neighbors(&cos, k).into_iter().enumerate() {
        for j in nbrs {
            edge[i][j] = true;
            edge[j][i] = true;
        }
    }

    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if edge[i][j] {
                // symmetric by construction: use the (min, max) entry for both halves
                let w = cos[(i.min(j), i.max(j))].clamp(0.0, 1.0);
                if w > 0.0 {
                    adjacency[i].push((j, w));
                }
            }
        }
    }
    let degrees: DVector<f64> =
        DVector::from_iterator(n, adjacency.iter().map(|r| r.iter().map(|e| e.1).sum()));

    let inv_sqrt: Vec<f64> = degrees
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut laplacian = DMatrix::zeros(n, n);
    for i in 0..n {
        if degrees[i] > 0.0 {
            laplacian[(i, i)] = 1.0;
        }
        for &(j, w) in &adjacency[i] {
            // fixed operand order keeps the matrix exactly symmetric
            laplacian[(i, j)] = -w * (inv_sqrt[i.min(j)] * inv_sqrt[i.max(j)]);
        }
    }
    Ok(AffinityGraph {
        adjacency,
        degrees,
        laplacian,
    })
}

/// The `k` most similar other nodes of each node, most similar first.
fn nearest_neighbors(sim: &DMatrix<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = sim.nrows();
    (0..n)
        .map(|i| {
            let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| sim[(i, b)].total_cmp(&sim[(i, a)]).then(a.cmp(&b)));
            order.truncate(k);
            order
        })
        .collect()
}

pub fn pad_laplacian(g: &AffinityGraph, n_source: usize) -> PaddedLaplacian {
    PaddedLaplacian {
        n_source,
        target: g.laplacian.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_identical_points() {
        let xt = DMatrix::from_row_slice(2, 2, &[1., 1., 0., 0.]);
        let g = build_affinity(&xt, 1).unwrap();
        assert_eq!(
            g.affinity_dense(),
            DMatrix::from_row_slice(2, 2, &[0., 1., 1., 0.])
        );
        assert_eq!(
            *g.normalized_laplacian(),
            DMatrix::from_row_slice(2, 2, &[1., -1., -1., 1.])
        );
    }

    #[test]
    fn single_node() {
        let g = build_affinity(&DMatrix::from_element(3, 1, 1.0), 5).unwrap();
        assert_eq!(g.affinity_dense(), DMatrix::zeros(1, 1));
        assert_eq!(*g.normalized_laplacian(), DMatrix::zeros(1, 1));
    }

    #[test]
    fn orthogonal_points_are_isolated() {
        let g = build_affinity(&DMatrix::identity(3, 3), 1).unwrap();
        assert_eq!(g.affinity_dense(), DMatrix::zeros(3, 3));
        assert_eq!(*g.normalized_laplacian(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn negative_cosines_clamped() {
        let xt = DMatrix::from_row_slice(1, 2, &[1., -1.]);
        let g = build_affinity(&xt, 1).unwrap();
        assert_eq!(g.affinity_dense(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn zero_norm_reported() {
        let xt = DMatrix::from_row_slice(2, 3, &[1., 0., 2., 1., 0., 2.]);
        assert!(matches!(
            build_affinity(&xt, 1),
            Err(GraphError::ZeroNorm(1))
        ));
    }

    #[test]
    fn ties_break_to_lower_index() {
        let sim = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.5, 0.5, 0.5, 0.5, 1.0, 0.2, 0.9, 0.5, 0.2, 1.0, 0.9, 0.5, 0.9, 0.9, 1.0,
            ],
        );
        let nn = nearest_neighbors(&sim, 2);
        assert_eq!(nn[0], vec![1, 2]);
        assert_eq!(nn[1], vec![3, 0]);
        assert_eq!(nn[3], vec![1, 2]);
    }

    #[test]
    fn padding_blocks() {
        let g = build_affinity(&DMatrix::from_element(2, 1, 1.0), 1).unwrap();
        let p = pad_laplacian(&g, 2);
        assert_eq!(p.to_dense(), DMatrix::zeros(3, 3));
        let xt = DMatrix::from_row_slice(2, 2, &[1., 1., 0., 0.]);
        let g = build_affinity(&xt, 1).unwrap();
        assert_eq!(pad_laplacian(&g, 0).to_dense(), *g.normalized_laplacian());
        let p = pad_laplacian(&g, 2).to_dense();
        assert_eq!(p.view((0, 0), (2, 2)), DMatrix::<f64>::zeros(2, 2));
        assert_eq!(p.view((2, 2), (2, 2)), *g.normalized_laplacian());
    }

    #[test]
    fn padded_mul_matches_dense() {
        let xt = DMatrix::from_fn(3, 5, |i, j| 1.0 + ((i * 7 + j * 3) % 5) as f64);
        let g = build_affinity(&xt, 2).unwrap();
        let p = pad_laplacian(&g, 3);
        let b = DMatrix::from_fn(8, 2, |i, j| (i as f64 - 3.0) * (j as f64 + 1.0));
        assert!((p.mul(&b) - p.to_dense() * &b).norm() < 1e-12);
    }

    #[test]
    fn coo_dump() {
        let xt = DMatrix::from_row_slice(2, 2, &[1., 1., 0., 0.]);
        let mut buf = Vec::new();
        build_affinity(&xt, 1).unwrap().write_coo(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0 1 1e0\n1 0 1e0\n");
    }
}
