//! Clustering-based evaluation of selected features.

mod kmeans;
mod metrics;
mod protocol;

pub use kmeans::{kmeans, ClusteringResult, MAX_LLOYD_ITERATIONS};
pub use metrics::{accuracy, hungarian_min_cost, nmi};
pub use protocol::{evaluate, evaluate_data, stability_eta, MetricSummary};

/// Independent per-run seed derived from a base seed.
pub(crate) fn derive_seed(base: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
