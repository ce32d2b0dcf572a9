//! Feature ranking from a solved transformation matrix, and the
//! maximum-variance baseline.

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Features ordered by descending score.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub scores: Vec<f64>,
    /// Feature indices, best first. Equal scores keep index order.
    pub order: Vec<usize>,
}

impl FeatureRanking {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self { scores, order }
    }

    pub fn top(&self, q: usize) -> &[usize] {
        &self.order[..q.min(self.order.len())]
    }
}

/// Scores each feature by the Euclidean norm of its row of `W`.
pub fn rank_features(w: &DMatrix<f64>) -> FeatureRanking {
    FeatureRanking::from_scores(w.row_iter().map(|r| r.norm()).collect())
}

/// Restricts the data to the `q` best-ranked features, best first.
pub fn select_top(ranking: &FeatureRanking, q: usize, data: &DataMatrix) -> Result<DataMatrix> {
    let d = data.n_features();
    if ranking.order.len() != d {
        return Err(Error::dims(format!(
            "ranking covers {} features, data has {d}",
            ranking.order.len()
        )));
    }
    if q < 1 || q > d {
        return Err(Error::param(format!("selected feature count {q} must lie in [1, {d}]")));
    }
    data.select_rows(ranking.top(q))
}

/// Ranks features by unbiased sample variance across samples.
pub fn maxvar_rank(data: &DataMatrix) -> FeatureRanking {
    let n = data.n_samples() as f64;
    let scores = data
        .x()
        .row_iter()
        .map(|row| {
            let mean = row.sum() / n;
            row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .collect();
    FeatureRanking::from_scores(scores)
}
