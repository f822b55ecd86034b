//! Numeric core for reasoning over embedding-space plots: datasets and
//! embedding payloads, exact t-SNE and PCA layouts, k-nearest-neighbor
//! context, deterministic PNG rendering, answer parsing and metrics.
//!
//! The numeric types are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

// `!(x > 0)` is used on purpose so NaN parameters fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod dimred;
pub mod knn;
pub mod metrics;
pub mod parser;
mod scalar;
pub mod viz;

pub use scalar::Scalar;

pub type Embeddings = data::EmbeddingMatrix<f64>;
pub type Embeddings32 = data::EmbeddingMatrix<f32>;
pub type Layout = dimred::Layout2D<f64>;
pub type Layout32 = dimred::Layout2D<f32>;
pub type Affinities = dimred::AffinityMatrix<f64>;
pub type TsneConfig = dimred::TsneParams<f64>;
pub type Neighbors = knn::NeighborSet<f64>;
pub type Pca = dimred::PcaProjection<f64>;
