//! The feature-by-sample data matrix shared by every stage of the pipeline.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A `d × n` data matrix (one column per sample) with the target cluster
/// count and optional ground-truth labels.
///
/// Labels are only consumed by evaluation; the solver never sees them.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    x: DMatrix<f64>,
    n_clusters: usize,
    labels: Option<Vec<usize>>,
    feature_ids: Vec<usize>,
}

impl DataMatrix {
    pub fn new(x: DMatrix<f64>, n_clusters: usize) -> Result<Self> {
        let (d, n) = x.shape();
        if d < 1 {
            return Err(Error::param("data matrix needs at least one feature"));
        }
        if n < 2 {
            return Err(Error::param(format!("data matrix needs at least two samples, got {n}")));
        }
        if n_clusters < 1 || n_clusters > n {
            return Err(Error::param(format!(
                "cluster count {n_clusters} must lie in [1, {n}]"
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite entry at feature {}, sample {}",
                pos % d,
                pos / d
            )));
        }
        Ok(Self {
            x,
            n_clusters,
            labels: None,
            feature_ids: (0..d).collect(),
        })
    }

    /// Attaches ground-truth labels (one per sample).
    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_samples() {
            return Err(Error::dims(format!(
                "{} labels for {} samples",
                labels.len(),
                self.n_samples()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Same metadata, different values. Used for noisy or rescaled copies.
    pub fn with_values(&self, x: DMatrix<f64>) -> Result<Self> {
        if x.shape() != self.x.shape() {
            return Err(Error::dims(format!(
                "replacement matrix is {:?}, expected {:?}",
                x.shape(),
                self.x.shape()
            )));
        }
        let mut out = DataMatrix::new(x, self.n_clusters)?;
        out.labels = self.labels.clone();
        out.feature_ids = self.feature_ids.clone();
        Ok(out)
    }

    /// Keeps the given rows (features) in the given order. Original feature
    /// ids are carried along.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::param("cannot select zero features"));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_features()) {
            return Err(Error::param(format!(
                "feature index {bad} out of range for d = {}",
                self.n_features()
            )));
        }
        let x = self.x.select_rows(rows.iter());
        Ok(Self {
            x,
            n_clusters: self.n_clusters,
            labels: self.labels.clone(),
            feature_ids: rows.iter().map(|&r| self.feature_ids[r]).collect(),
        })
    }

    /// Per-feature z-scoring. Constant features become all-zero rows.
    pub fn standardized(&self) -> Self {
        let mut x = self.x.clone();
        let n = self.n_samples() as f64;
        for mut row in x.row_iter_mut() {
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let sd = var.sqrt();
            for v in row.iter_mut() {
                *v = if sd > 0.0 { (*v - mean) / sd } else { 0.0 };
            }
        }
        Self {
            x,
            n_clusters: self.n_clusters,
            labels: self.labels.clone(),
            feature_ids: self.feature_ids.clone(),
        }
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n_features(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Original (pre-selection) index of each current row.
    pub fn feature_ids(&self) -> &[usize] {
        &self.feature_ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(DataMatrix::new(DMatrix::zeros(3, 1), 1).is_err());
        assert!(DataMatrix::new(DMatrix::zeros(3, 4), 5).is_err());
        assert!(DataMatrix::new(DMatrix::zeros(3, 4), 0).is_err());
        assert!(DataMatrix::new(DMatrix::zeros(3, 4), 4).is_ok());
    }

    #[test]
    fn rejects_non_finite() {
        let mut x = DMatrix::zeros(2, 3);
        x[(1, 2)] = f64::NAN;
        let err = DataMatrix::new(x, 1).unwrap_err().to_string();
        assert!(err.contains("feature 1, sample 2"), "{err}");
    }

    #[test]
    fn select_rows_tracks_ids() {
        let x = DMatrix::from_fn(4, 3, |i, j| (i * 10 + j) as f64);
        let data = DataMatrix::new(x, 2).unwrap();
        let sub = data.select_rows(&[3, 1]).unwrap();
        assert_eq!(sub.feature_ids(), &[3, 1]);
        assert_eq!(sub.x()[(0, 2)], 32.0);
        let subsub = sub.select_rows(&[1]).unwrap();
        assert_eq!(subsub.feature_ids(), &[1]);
    }

    #[test]
    fn standardize_constant_row() {
        let x = DMatrix::from_row_slice(2, 3, &[5.0, 5.0, 5.0, 1.0, 2.0, 3.0]);
        let s = DataMatrix::new(x, 1).unwrap().standardized();
        assert_eq!(s.x().row(0).iter().copied().collect::<Vec<_>>(), vec![0.0; 3]);
        assert!((s.x()[(1, 0)] + 1.0).abs() < 1e-15);
        assert!((s.x()[(1, 2)] - 1.0).abs() < 1e-15);
    }
}
