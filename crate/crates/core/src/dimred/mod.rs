//! Two-dimensional layouts of embedding matrices: exact t-SNE and PCA.

mod affinity;
mod layout;
mod pca;
mod tsne;

use thiserror::Error;

pub use affinity::{
    pairwise_affinities, pairwise_affinities_with_floor, squared_distances, AffinityMatrix,
};
pub use layout::{joint_layout, KlRecord, Layout2D, PointRole};
pub use pca::{pca_project, PcaProjection};
pub use tsne::{kl_divergence, kl_gradient, tsne_fit, TsneParams};

#[derive(Debug, Error, PartialEq)]
pub enum DimredError {
    #[error("n too small: need at least {min} points, got {n}")]
    TooFewPoints { n: usize, min: usize },
    #[error("perplexity {perplexity} must lie in [1, n - 1) for n = {n}")]
    PerplexityOutOfRange { perplexity: f64, n: usize },
    #[error("perplexity infeasible for row {row}: best reachable {achieved:.6}, target {target}")]
    PerplexityInfeasible {
        row: usize,
        achieved: f64,
        target: f64,
    },
    #[error("non-finite gradient at iteration {iteration}")]
    NonFiniteGradient { iteration: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("dimension mismatch: train has d = {train}, query has d = {query}")]
    DimensionMismatch { train: usize, query: usize },
    #[error("{labels} labels for {rows} train rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("requested {dims} components, at most {max} available")]
    TooManyComponents { dims: usize, max: usize },
}
