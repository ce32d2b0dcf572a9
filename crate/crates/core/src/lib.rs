//! Unsupervised feature selection with an `ℓ2,1`-regularized spectral
//! regression model under nonnegative orthogonal constraints.
//!
//! The model couples a spectral clustering term `Tr(YᵀLY)` on a k-NN
//! Gaussian graph with a row-sparse regression of the cluster indicator `Y`
//! onto the data, and is solved by an inexact augmented Lagrangian method
//! whose subproblems are handled by proximal alternating minimization with
//! closed-form block updates. Features are ranked by the row norms of the
//! learned transformation `W` and judged by k-means ACC/NMI.
//!
//! ```no_run
//! use ufs_core::prelude::*;
//! # fn main() -> ufs_core::Result<()> {
//! let data = load_dataset("data.csv", &LoadOptions::default())?;
//! let report = run_pipeline(&data, &PipelineConfig::default(), &[50, 100])?;
//! println!("best feature: {}", report.ranking.order[0]);
//! # Ok(())
//! # }
//! ```

pub mod alm;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod pipeline;
pub mod select;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::alm::{alm_solve, kkt_report, AlmOutcome, FeasibilityResiduals, Init, KktReport, OuterTrace};
    pub use crate::data::DataMatrix;
    pub use crate::eval::{accuracy, evaluate, kmeans, nmi, stability_eta, MetricSummary};
    pub use crate::graph::{build_graph, build_knn_affinity, normalized_laplacian, AffinityGraph, Bandwidth};
    pub use crate::io::{load_dataset, LoadOptions};
    pub use crate::pipeline::{robustness_protocol, run_pipeline, PipelineConfig, PipelineReport};
    pub use crate::select::{maxvar_rank, rank_features, select_top, FeatureRanking};
    pub use crate::solver::{HyperParams, Problem, SolverState, ToleranceSchedule};
    pub use crate::{Error, Result};
}
