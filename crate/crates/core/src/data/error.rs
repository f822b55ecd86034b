use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("unknown task_kind {0:?}")]
    UnknownTaskKind(String),
    #[error("row/sample mismatch: payload holds {rows} rows of dim {dim}, manifest lists {samples} samples")]
    RowSampleMismatch {
        rows: usize,
        dim: usize,
        samples: usize,
    },
    #[error("non-finite value at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("sample {id:?}: {message}")]
    InvalidLabel { id: String, message: String },
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("query fraction {0} outside (0, 1)")]
    FractionOutOfRange(f64),
    #[error("split would leave class {class} without training samples")]
    ClassLosesTrain { class: usize },
    #[error("split would leave no training samples")]
    NoTrainSamples,
    #[error("dataset needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("table is empty")]
    EmptyTable,
    #[error("column {0:?} has no non-missing values")]
    AllMissing(String),
    #[error("csv: {0}")]
    Csv(String),
}
