//! Metrics, the 1NN baseline, and per-iteration diagnostics.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::Dataset;

pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} predictions vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("accuracy of an empty prediction set is undefined")]
    Empty,
    #[error("feature dimension mismatch: source {0}, target {1}")]
    DimensionMismatch(usize, usize),
    #[error("source dataset must be fully labeled")]
    MissingLabels,
    #[error("column {0} is not a probability distribution")]
    NotSimplex(usize),
}

/// Diagnostics for one outer iteration, serialized as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based outer iteration.
    pub iter: usize,
    pub lambda: f64,
    pub selected_count: usize,
    /// Objective after the last inner alternation.
    pub objective: f64,
    pub target_accuracy: Option<f64>,
    pub source_accuracy: Option<f64>,
    pub confidence_histogram: [usize; HISTOGRAM_BINS],
    /// Objective before the first inner step followed by the value after
    /// each (W, P) alternation.
    #[serde(skip)]
    pub inner_objectives: Vec<f64>,
}

pub fn write_jsonl<W: Write>(records: &[IterationRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Each target sample takes the label of its Euclidean nearest source sample,
/// lowest source index on ties.
pub fn baseline_1nn(source: &Dataset, target: &Dataset) -> Result<Vec<usize>, EvalError> {
    if source.dim() != target.dim() {
        return Err(EvalError::DimensionMismatch(source.dim(), target.dim()));
    }
    let labels = source
        .dense_labels()
        .map_err(|_| EvalError::MissingLabels)?;
    let xs = source.features();
    Ok(target
        .features()
        .column_iter()
        .map(|t| {
            let mut best = (0, f64::INFINITY);
            for (i, s) in xs.column_iter().enumerate() {
                let d: f64 = s.iter().zip(t.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.1 {
                    best = (i, d);
                }
            }
            labels[best.0]
        })
        .collect())
}

/// Counts of each column's largest probability in bins `[b/10, (b+1)/10)`,
/// the last bin closed at 1.
pub fn confidence_histogram(probs: &DMatrix<f64>) -> Result<[usize; HISTOGRAM_BINS], EvalError> {
    const TOL: f64 = 1e-9;
    let mut bins = [0; HISTOGRAM_BINS];
    for (i, col) in probs.column_iter().enumerate() {
        if col.iter().any(|&p| p.is_nan() || p < -TOL) || (col.sum() - 1.0).abs() > TOL {
            return Err(EvalError::NotSimplex(i));
        }
        let top = col.max().clamp(0.0, 1.0);
        let b = ((top * HISTOGRAM_BINS as f64).floor() as usize).min(HISTOGRAM_BINS - 1);
        bins[b] += 1;
    }
    Ok(bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 2, 3], &[0, 1, 2, 0]).unwrap(), 0.75);
        assert!(matches!(
            accuracy(&[0], &[0, 1]),
            Err(EvalError::LengthMismatch(1, 2))
        ));
        assert!(matches!(accuracy(&[], &[]), Err(EvalError::Empty)));
    }

    fn ds(cols: &[[f64; 2]], labels: Option<&[usize]>) -> Dataset {
        let x = DMatrix::from_fn(2, cols.len(), |i, j| cols[j][i]);
        let d = Dataset::new(x).unwrap();
        match labels {
            Some(l) => d.with_dense_labels(l, None).unwrap(),
            None => d,
        }
    }

    #[test]
    fn one_nn_cases() {
        let src = ds(&[[0., 0.], [5., 5.], [10., 0.]], Some(&[2, 0, 1]));
        let tgt = ds(&[[5., 5.], [9., 1.]], None);
        assert_eq!(baseline_1nn(&src, &tgt).unwrap(), vec![0, 1]);

        let single = ds(&[[3., 3.]], Some(&[4]));
        assert_eq!(baseline_1nn(&single, &tgt).unwrap(), vec![4, 4]);

        let tie = ds(&[[-1., 0.], [1., 0.]], Some(&[7, 3]));
        assert_eq!(baseline_1nn(&tie, &ds(&[[0., 0.]], None)).unwrap(), vec![7]);
    }

    #[test]
    fn one_nn_on_own_data_is_perfect() {
        let cols = [[0., 1.], [2., 3.], [4., 1.], [0., 7.]];
        let labels = [0, 1, 2, 1];
        let src = ds(&cols, Some(&labels));
        let pred = baseline_1nn(&src, &ds(&cols, None)).unwrap();
        assert_eq!(accuracy(&pred, &labels).unwrap(), 1.0);
    }

    #[test]
    fn histogram_cases() {
        let one_hot = DMatrix::from_row_slice(2, 3, &[1., 0., 1., 0., 1., 0.]);
        assert_eq!(
            confidence_histogram(&one_hot).unwrap(),
            [0, 0, 0, 0, 0, 0, 0, 0, 0, 3]
        );
        let uniform = DMatrix::from_element(4, 5, 0.25);
        assert_eq!(confidence_histogram(&uniform).unwrap()[2], 5);
        assert_eq!(
            confidence_histogram(&DMatrix::zeros(3, 0)).unwrap(),
            [0; 10]
        );
        let bad = DMatrix::from_element(2, 1, 0.7);
        assert!(matches!(
            confidence_histogram(&bad),
            Err(EvalError::NotSimplex(0))
        ));
    }

    #[test]
    fn jsonl_field_names() {
        let rec = IterationRecord {
            iter: 1,
            lambda: 2.0,
            selected_count: 3,
            objective: 1.5,
            target_accuracy: Some(0.5),
            source_accuracy: None,
            confidence_histogram: [0; 10],
            inner_objectives: vec![1.0],
        };
        let mut buf = Vec::new();
        write_jsonl(&[rec], &mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(
            line,
            "{\"iter\":1,\"lambda\":2.0,\"selected_count\":3,\"objective\":1.5,\
             \"target_accuracy\":0.5,\"source_accuracy\":null,\
             \"confidence_histogram\":[0,0,0,0,0,0,0,0,0,0]}\n"
        );
    }
}
