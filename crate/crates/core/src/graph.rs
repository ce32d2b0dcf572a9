//! k-nearest-neighbour Gaussian affinity graph and its normalized Laplacian.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Gaussian kernel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Fixed(f64),
    /// Mean distance from each sample to its k-th nearest neighbour.
    Auto,
}

/// Symmetric similarity graph over the samples.
#[derive(Debug, Clone)]
pub struct AffinityGraph {
    pub similarity: DMatrix<f64>,
    pub degree: DVector<f64>,
    /// Filled by [`normalized_laplacian`].
    pub laplacian: Option<DMatrix<f64>>,
    pub k: usize,
    pub sigma: f64,
}

impl AffinityGraph {
    pub fn n_nodes(&self) -> usize {
        self.similarity.nrows()
    }
}

/// Exact pairwise squared Euclidean distances between columns of `x`.
pub fn pairwise_sq_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.column(i);
            (0..n)
                .map(|j| {
                    xi.iter()
                        .zip(x.column(j).iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum()
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Indices of the `k` nearest other samples of each sample, nearest first.
/// Equal distances are broken toward the lower sample index.
pub fn knn_indices(sq_dist: &DMatrix<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = sq_dist.nrows();
    (0..n)
        .map(|i| {
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| {
                sq_dist[(i, a)]
                    .total_cmp(&sq_dist[(i, b)])
                    .then(a.cmp(&b))
            });
            others.truncate(k);
            others
        })
        .collect()
}

/// Builds `S` and `D`. An edge `(i, j)` exists when either endpoint is among
/// the other's `k` nearest neighbours; its weight is
/// `exp(-‖x_i − x_j‖² / (2σ²))`.
pub fn build_knn_affinity(
    data: &DataMatrix,
    k: usize,
    bandwidth: Bandwidth,
) -> Result<AffinityGraph> {
    let n = data.n_samples();
    if k < 1 || k > n - 1 {
        return Err(Error::param(format!("neighbour count k = {k} must lie in [1, {}]", n - 1)));
    }
    let sq = pairwise_sq_distances(data.x());
    let neighbours = knn_indices(&sq, k);

    let sigma = match bandwidth {
        Bandwidth::Fixed(s) if s > 0.0 && s.is_finite() => s,
        Bandwidth::Fixed(s) => {
            return Err(Error::param(format!("bandwidth must be positive, got {s}")))
        }
        Bandwidth::Auto => {
            let mean = neighbours
                .iter()
                .enumerate()
                .map(|(i, nb)| sq[(i, nb[k - 1])].sqrt())
                .sum::<f64>()
                / n as f64;
            if !(mean > 0.0) {
                return Err(Error::DegenerateBandwidth(
                    "every sample coincides with its k-th neighbour".into(),
                ));
            }
            mean
        }
    };

    let mut adjacent = vec![false; n * n];
    for (i, nb) in neighbours.iter().enumerate() {
        for &j in nb {
            adjacent[i * n + j] = true;
            adjacent[j * n + i] = true;
        }
    }
    let two_sigma_sq = 2.0 * sigma * sigma;
    let similarity = DMatrix::from_fn(n, n, |i, j| {
        if adjacent[i * n + j] {
            (-sq[(i, j)] / two_sigma_sq).exp()
        } else {
            0.0
        }
    });
    let degree = DVector::from_iterator(n, similarity.row_iter().map(|r| r.sum()));

    Ok(AffinityGraph {
        similarity,
        degree,
        laplacian: None,
        k,
        sigma,
    })
}

/// Fills `L = D^{-1/2} (D − S) D^{-1/2}`. Isolated nodes (zero degree) get
/// `D^{-1/2} := 0`, leaving their row and column of `L` zero.
pub fn normalized_laplacian(mut graph: AffinityGraph) -> AffinityGraph {
    let n = graph.n_nodes();
    let s = &graph.similarity;
    let deg = &graph.degree;
    let laplacian = DMatrix::from_fn(n, n, |i, j| {
        if deg[i] <= 0.0 || deg[j] <= 0.0 {
            0.0
        } else if i == j {
            // S_ii = 0, so the diagonal is D_ii / D_ii.
            1.0
        } else {
            -s[(i, j)] / (deg[i] * deg[j]).sqrt()
        }
    });
    graph.laplacian = Some(laplacian);
    graph
}

/// Convenience: affinity graph with its Laplacian filled in.
pub fn build_graph(data: &DataMatrix, k: usize, bandwidth: Bandwidth) -> Result<AffinityGraph> {
    build_knn_affinity(data, k, bandwidth).map(normalized_laplacian)
}
