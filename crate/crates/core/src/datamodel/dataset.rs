use std::collections::BTreeSet;

use nalgebra::DMatrix;

use super::DataError;

/// Features for one domain, stored column-per-sample (`m x n`), plus optional
/// labels. `None` in the label vector marks an unlabeled sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: Option<Vec<Option<usize>>>,
    class_count: usize,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>) -> Result<Self, DataError> {
        let (m, n) = features.shape();
        if m == 0 || n == 0 {
            return Err(DataError::Empty { m, n });
        }
        for (j, col) in features.column_iter().enumerate() {
            if let Some(i) = col.iter().position(|x| !x.is_finite()) {
                return Err(DataError::NonFiniteValue {
                    row: j + 1,
                    col: i + 1,
                });
            }
        }
        Ok(Self {
            features,
            labels: None,
            class_count: 0,
        })
    }

    /// Attach labels. Every present label must lie in `[0, class_count)`.
    pub fn with_labels(
        mut self,
        labels: Vec<Option<usize>>,
        class_count: usize,
    ) -> Result<Self, DataError> {
        if labels.len() != self.len() {
            return Err(DataError::LabelCountMismatch {
                expected: self.len(),
                found: labels.len(),
            });
        }
        if let Some((index, &Some(label))) = labels
            .iter()
            .enumerate()
            .find(|(_, l)| matches!(l, Some(c) if *c >= class_count))
        {
            return Err(DataError::ClassOutOfRange {
                index,
                label: label as i64,
                class_count,
            });
        }
        self.labels = Some(labels);
        self.class_count = class_count;
        Ok(self)
    }

    /// Attach fully-observed labels, inferring `class_count` as `max + 1`
    /// unless given.
    pub fn with_dense_labels(
        self,
        labels: &[usize],
        class_count: Option<usize>,
    ) -> Result<Self, DataError> {
        let c = class_count.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        self.with_labels(labels.iter().map(|&l| Some(l)).collect(), c)
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[Option<usize>]> {
        self.labels.as_deref()
    }

    /// Labels with every sample required to be labeled.
    pub fn dense_labels(&self) -> Result<Vec<usize>, DataError> {
        let labels = self.labels.as_ref().ok_or(DataError::MissingLabels)?;
        labels
            .iter()
            .enumerate()
            .map(|(index, l)| l.ok_or(DataError::Unlabeled { index }))
            .collect()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Feature dimension `m`.
    pub fn dim(&self) -> usize {
        self.features.nrows()
    }

    /// Sample count `n`.
    pub fn len(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Scale every sample to unit L2 norm. Zero columns are left untouched.
    pub fn l2_normalized(&self) -> Self {
        let mut out = self.clone();
        for mut col in out.features.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        out
    }

    pub(crate) fn from_parts_unchecked(
        features: DMatrix<f64>,
        labels: Option<Vec<Option<usize>>>,
        class_count: usize,
    ) -> Self {
        Self {
            features,
            labels,
            class_count,
        }
    }
}

/// Keep only samples whose label is in `keep`. Labels keep their original
/// indexing and `class_count` is unchanged, so the output space stays the
/// full source label space.
pub fn subset_classes(ds: &Dataset, keep: &BTreeSet<usize>) -> Result<Dataset, DataError> {
    let labels = ds.labels().ok_or(DataError::MissingLabels)?;
    if keep.is_empty() {
        return Err(DataError::EmptySubset);
    }
    if let Some(&bad) = keep.iter().find(|&&c| c >= ds.class_count()) {
        return Err(DataError::ClassOutOfRange {
            index: 0,
            label: bad as i64,
            class_count: ds.class_count(),
        });
    }
    let idx: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l, Some(c) if keep.contains(c)))
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return Err(DataError::EmptyResult);
    }
    let features = ds.features().select_columns(idx.iter());
    let labels = idx.iter().map(|&i| labels[i]).collect();
    Ok(Dataset::from_parts_unchecked(
        features,
        Some(labels),
        ds.class_count(),
    ))
}

/// One-hot `C x n` matrix with column `i` equal to `e_{labels[i]}`.
pub fn one_hot(labels: &[usize], class_count: usize) -> Result<DMatrix<f64>, DataError> {
    let mut out = DMatrix::zeros(class_count, labels.len());
    for (i, &l) in labels.iter().enumerate() {
        if l >= class_count {
            return Err(DataError::ClassOutOfRange {
                index: i,
                label: l as i64,
                class_count,
            });
        }
        out[(l, i)] = 1.0;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six_class() -> Dataset {
        let labels = [0, 1, 2, 3, 4, 5, 0, 0, 2, 5];
        let x = DMatrix::from_fn(2, labels.len(), |i, j| (i * 10 + j) as f64);
        Dataset::new(x)
            .unwrap()
            .with_dense_labels(&labels, Some(6))
            .unwrap()
    }

    #[test]
    fn one_hot_definition() {
        let p = one_hot(&[0, 2], 3).unwrap();
        assert_eq!(p, DMatrix::from_row_slice(3, 2, &[1., 0., 0., 0., 0., 1.]));
        assert_eq!(one_hot(&[], 3).unwrap().shape(), (3, 0));
        assert!(matches!(
            one_hot(&[3], 3),
            Err(DataError::ClassOutOfRange { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        let x = DMatrix::from_row_slice(2, 2, &[0., 1., f64::NAN, 2.]);
        assert!(matches!(
            Dataset::new(x),
            Err(DataError::NonFiniteValue { row: 1, col: 2 })
        ));
        assert!(matches!(
            Dataset::new(DMatrix::zeros(0, 3)),
            Err(DataError::Empty { .. })
        ));
    }

    #[test]
    fn label_range_checked() {
        let ds = Dataset::new(DMatrix::zeros(1, 2)).unwrap();
        assert!(ds.clone().with_labels(vec![Some(0), Some(3)], 3).is_err());
        assert!(ds.clone().with_labels(vec![Some(0)], 3).is_err());
        let ds = ds.with_labels(vec![Some(2), None], 3).unwrap();
        assert!(matches!(
            ds.dense_labels(),
            Err(DataError::Unlabeled { index: 1 })
        ));
    }

    #[test]
    fn subset_identity() {
        let ds = six_class();
        let all: BTreeSet<usize> = (0..6).collect();
        assert_eq!(subset_classes(&ds, &all).unwrap(), ds);
    }

    #[test]
    fn subset_counts_and_keeps_indexing() {
        let ds = six_class();
        let keep: BTreeSet<usize> = [0, 1, 2].into();
        let sub = subset_classes(&ds, &keep).unwrap();
        assert_eq!(sub.len(), 6);
        assert_eq!(sub.class_count(), 6);
        assert_eq!(sub.dense_labels().unwrap(), vec![0, 1, 2, 0, 0, 2]);
        assert_eq!(sub.features().column(3), ds.features().column(6));
    }

    #[test]
    fn subset_errors() {
        let ds = six_class();
        let keep: BTreeSet<usize> = [99].into();
        assert!(matches!(
            subset_classes(&ds, &keep),
            Err(DataError::ClassOutOfRange { .. })
        ));
        assert!(matches!(
            subset_classes(&ds, &BTreeSet::new()),
            Err(DataError::EmptySubset)
        ));
    }

    #[test]
    fn l2_normalization() {
        let x = DMatrix::from_row_slice(2, 2, &[3., 0., 4., 0.]);
        let ds = Dataset::new(x).unwrap().l2_normalized();
        assert!((ds.features().column(0).norm() - 1.0).abs() < 1e-15);
        assert_eq!(ds.features().column(1).norm(), 0.0);
    }
}
