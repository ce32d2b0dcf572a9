use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_LLOYD_ITERATIONS: usize = 300;

/// Output of [`kmeans`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    /// Cluster of each sample, in `0..c`.
    pub assignment: Vec<usize>,
    /// `c × q`, one center per row.
    pub centers: DMatrix<f64>,
    pub inertia: f64,
    /// Inertia after each assignment step of the returned restart.
    pub inertia_history: Vec<f64>,
}

fn sq_dist_to_row(points: &DMatrix<f64>, j: usize, centers: &DMatrix<f64>, r: usize) -> f64 {
    points
        .column(j)
        .iter()
        .zip(centers.row(r).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Assigns every sample to its nearest center (lower index on ties) and
/// returns the per-sample squared distances.
fn assign(points: &DMatrix<f64>, centers: &DMatrix<f64>, assignment: &mut [usize]) -> Vec<f64> {
    let c = centers.nrows();
    (0..points.ncols())
        .map(|j| {
            let mut best = (0, f64::INFINITY);
            for r in 0..c {
                let d = sq_dist_to_row(points, j, centers, r);
                if d < best.1 {
                    best = (r, d);
                }
            }
            assignment[j] = best.0;
            best.1
        })
        .collect()
}

fn lloyd(points: &DMatrix<f64>, c: usize, rng: &mut ChaCha8Rng) -> ClusteringResult {
    let (q, n) = points.shape();
    let mut centers = DMatrix::zeros(c, q);
    for (r, j) in sample(rng, n, c).into_iter().enumerate() {
        centers.row_mut(r).copy_from(&points.column(j).transpose());
    }

    let mut assignment = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut previous: Vec<usize> = Vec::new();
    loop {
        let dist = assign(points, &centers, &mut assignment);
        let inertia: f64 = dist.iter().sum();
        history.push(inertia);
        if assignment == previous || history.len() >= MAX_LLOYD_ITERATIONS {
            return ClusteringResult {
                assignment,
                centers,
                inertia,
                inertia_history: history,
            };
        }
        previous.clone_from(&assignment);

        let mut sums = DMatrix::zeros(c, q);
        let mut counts = vec![0usize; c];
        for (j, &r) in assignment.iter().enumerate() {
            counts[r] += 1;
            let mut row = sums.row_mut(r);
            row += points.column(j).transpose();
        }
        let mut taken = vec![false; n];
        for r in 0..c {
            if counts[r] > 0 {
                let mean = sums.row(r) / counts[r] as f64;
                centers.row_mut(r).copy_from(&mean);
            } else {
                // Empty cluster: restart it at the sample farthest from its
                // own center.
                let far = (0..n)
                    .filter(|&j| !taken[j])
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .expect("c ≤ n leaves a free sample");
                taken[far] = true;
                centers.row_mut(r).copy_from(&points.column(far).transpose());
            }
        }
    }
}

/// Lloyd's algorithm on the columns of `points` (features × samples),
/// started `restarts` times from `c` distinct random samples; the restart
/// with the lowest inertia wins (earliest on ties).
pub fn kmeans(points: &DMatrix<f64>, c: usize, seed: u64, restarts: usize) -> Result<ClusteringResult> {
    let n = points.ncols();
    if c < 1 || c > n {
        return Err(Error::param(format!("cluster count {c} must lie in [1, {n}]")));
    }
    if restarts < 1 {
        return Err(Error::param("k-means needs at least one restart"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<ClusteringResult> = None;
    for _ in 0..restarts {
        let run = lloyd(points, c, &mut rng);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}
