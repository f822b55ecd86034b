//! Datasets, embedding matrices and their on-disk format.

mod dataset;
mod embedding;
mod error;
mod featurize;
mod manifest;
mod split;

pub use dataset::{Dataset, DatasetMetadata, Label, SampleRecord, Split, TaskKind};
pub use embedding::{EmbeddingMatrix, MetricHint};
pub use error::DataError;
pub use featurize::{
    featurize_tabular, read_csv_table, Column, ColumnKind, ConstantColumnPolicy,
    MissingCategoricalPolicy, MissingNumericPolicy, Table, TabularFeaturizerConfig,
};
pub use manifest::{load_dataset, save_dataset, Manifest, ManifestSample};
pub use split::{split_dataset, stratified_subsample};
