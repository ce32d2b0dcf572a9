//! Dataset ingestion, result serialization and experiment orchestration.

mod dataset;
mod experiment;
mod output;

pub use dataset::{load_dataset, parse_dataset, ColumnRef, LabelSource, LoadOptions};
pub use experiment::{
    resolve_feature_counts, run_grid, run_maxvar, run_robustness, run_single, GridRow, GridSpec,
    GridSummary, RunConfig, SingleRun,
};
pub use output::{
    metrics_document, read_grid_table, read_ranking, read_trace, write_atomic, write_metrics,
    write_ranking, write_trace, TraceRow, TRACE_HEADER,
};
