use serde::{Deserialize, Serialize};

use super::{tsne_fit, DimredError, TsneParams};
use crate::data::{EmbeddingMatrix, Label};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointRole {
    Train(Label),
    Query,
    /// Produced by a bare fit that knows nothing about splits.
    Unassigned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlRecord<T> {
    pub iteration: usize,
    pub kl: T,
}

/// 2-D coordinates for every input row, plus the optimizer trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout2D<T> {
    pub coords: Vec<[T; 2]>,
    pub roles: Vec<PointRole>,
    pub kl_trace: Vec<KlRecord<T>>,
    pub seed: u64,
}

impl<T: Scalar> Layout2D<T> {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Indices of rows tagged as queries, in row order.
    pub fn query_indices(&self) -> Vec<usize> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| matches!(r, PointRole::Query))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Embeds train and query rows together, train rows first.
///
/// Affinities only see coordinates, so query labels cannot leak into the
/// layout. Query rows get [`PointRole::Query`].
pub fn joint_layout<T: Scalar>(
    train: &EmbeddingMatrix<T>,
    train_labels: &[Label],
    query: Option<&EmbeddingMatrix<T>>,
    params: &TsneParams<T>,
) -> Result<Layout2D<T>, DimredError> {
    if train_labels.len() != train.n() {
        return Err(DimredError::LabelCount {
            labels: train_labels.len(),
            rows: train.n(),
        });
    }
    let stacked;
    let all = match query {
        Some(q) => {
            if q.d() != train.d() {
                return Err(DimredError::DimensionMismatch {
                    train: train.d(),
                    query: q.d(),
                });
            }
            stacked = train
                .vstack(q)
                .map_err(|_| DimredError::DimensionMismatch {
                    train: train.d(),
                    query: q.d(),
                })?;
            &stacked
        }
        None => train,
    };
    let mut layout = tsne_fit(all, params)?;
    layout.roles = train_labels
        .iter()
        .map(|&l| PointRole::Train(l))
        .chain(std::iter::repeat_n(
            PointRole::Query,
            query.map_or(0, |q| q.n()),
        ))
        .collect();
    Ok(layout)
}
