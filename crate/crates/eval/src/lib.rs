//! Per-query evaluation driver and report.
//!
//! [`run_evaluation`] runs layout, neighbor search, rendering, prompting,
//! querying and parsing for every query sample of a dataset and aggregates
//! the results into an [`EvalReport`].

mod config;
mod report;
mod run;

pub use config::{LayoutStrategy, PipelineConfig};
pub use report::{EvalReport, QueryRecord};
pub use run::{
    artifact_stem, render_queries, run_evaluation, Backend, EvalError, QueryPlot, Visualization,
};
