//! Planted-cluster data generator used by tests, benchmarks and demos.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// Shape of a planted dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedSpec {
    pub n_samples: usize,
    pub n_informative: usize,
    pub n_noise: usize,
    pub n_clusters: usize,
    /// Half-width of the range of cluster means on each informative feature;
    /// every feature has unit within-cluster noise.
    pub separation: f64,
}

/// A planted dataset together with the rows that carry cluster structure.
#[derive(Debug, Clone)]
pub struct Planted {
    pub data: DataMatrix,
    /// Informative feature indices, ascending.
    pub informative: Vec<usize>,
}

/// Samples `c` Gaussian clusters (balanced, labels `i mod c`) whose means
/// differ only on `n_informative` randomly placed features. On each of those
/// the cluster means are the `c` evenly spaced levels of `[−sep, sep]` in a
/// random order, so every informative feature carries the same spread. The
/// remaining features are i.i.d. standard normal noise.
pub fn planted_clusters(spec: &PlantedSpec, seed: u64) -> Result<Planted> {
    let PlantedSpec {
        n_samples: n,
        n_informative,
        n_noise,
        n_clusters: c,
        separation,
    } = *spec;
    let d = n_informative + n_noise;
    if d == 0 || c == 0 || c > n {
        return Err(Error::param("planted dataset needs d ≥ 1 and 1 ≤ c ≤ n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = (0..d).collect();
    rows.shuffle(&mut rng);
    let mut informative = rows[..n_informative].to_vec();
    informative.sort_unstable();

    let levels: Vec<f64> = (0..c)
        .map(|l| if c == 1 { 0.0 } else { separation * (2.0 * l as f64 / (c - 1) as f64 - 1.0) })
        .collect();
    let mut means = DMatrix::zeros(n_informative, c);
    for slot in 0..n_informative {
        let mut perm = levels.clone();
        perm.shuffle(&mut rng);
        for (l, m) in perm.into_iter().enumerate() {
            means[(slot, l)] = m;
        }
    }
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    let labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    let mut x = DMatrix::from_fn(d, n, |_, _| gauss());
    for (slot, &row) in informative.iter().enumerate() {
        for (j, &l) in labels.iter().enumerate() {
            x[(row, j)] += means[(slot, l)];
        }
    }
    let data = DataMatrix::new(x, c)?.with_labels(labels)?;
    Ok(Planted { data, informative })
}
