use serde::{Deserialize, Serialize};

use super::DataError;
use crate::Scalar;

/// How rows should be compared. Cosine-hinted matrices are L2-normalized
/// before any euclidean machinery touches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricHint {
    #[default]
    Euclidean,
    Cosine,
}

/// Dense row-major matrix of sample embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix<T> {
    n: usize,
    d: usize,
    values: Vec<T>,
    sample_ids: Vec<String>,
    metric_hint: MetricHint,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn new(
        n: usize,
        d: usize,
        values: Vec<T>,
        sample_ids: Vec<String>,
        metric_hint: MetricHint,
    ) -> Result<Self, DataError> {
        if n == 0 || d == 0 {
            return Err(DataError::Shape(format!(
                "embedding matrix must be at least 1x1, got {n}x{d}"
            )));
        }
        if sample_ids.len() != n {
            return Err(DataError::RowSampleMismatch {
                rows: n,
                dim: d,
                samples: sample_ids.len(),
            });
        }
        if values.len() != n * d {
            return Err(DataError::Shape(format!(
                "expected {} values for {n}x{d}, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self {
            n,
            d,
            values,
            sample_ids,
            metric_hint,
        })
    }

    /// Builds a matrix from rows, generating ids `"0"`, `"1"`, ...
    pub fn from_rows(rows: &[Vec<T>], metric_hint: MetricHint) -> Result<Self, DataError> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(DataError::Shape("ragged rows".into()));
        }
        let values = rows.iter().flatten().copied().collect();
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(rows.len(), d, values, ids, metric_hint)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn metric_hint(&self) -> MetricHint {
        self.metric_hint
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks_exact(self.d)
    }

    /// Copies the given rows, in order, into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self, DataError> {
        let mut values = Vec::with_capacity(indices.len() * self.d);
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n {
                return Err(DataError::Shape(format!(
                    "row {i} out of range for {} rows",
                    self.n
                )));
            }
            values.extend_from_slice(self.row(i));
            ids.push(self.sample_ids[i].clone());
        }
        Self::new(indices.len(), self.d, values, ids, self.metric_hint)
    }

    /// Stacks `other` below `self`. Both must share the dimension.
    pub fn vstack(&self, other: &Self) -> Result<Self, DataError> {
        if self.d != other.d {
            return Err(DataError::Shape(format!(
                "dimension mismatch: {} vs {}",
                self.d, other.d
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        let mut ids = self.sample_ids.clone();
        ids.extend(other.sample_ids.iter().cloned());
        Self::new(self.n + other.n, self.d, values, ids, self.metric_hint)
    }

    /// Returns a copy with every row scaled to unit L2 norm.
    ///
    /// Zero rows are left untouched; callers that need to reject them
    /// (cosine neighbor search) check norms themselves.
    pub fn l2_normalized(&self) -> Self {
        let mut values = self.values.clone();
        for row in values.chunks_exact_mut(self.d) {
            let norm = row.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm > T::zero() {
                row.iter_mut().for_each(|v| *v /= norm);
            }
        }
        Self {
            values,
            ..self.clone()
        }
    }

    pub fn cast<U: Scalar>(&self) -> EmbeddingMatrix<U> {
        EmbeddingMatrix {
            n: self.n,
            d: self.d,
            values: self.values.iter().map(|&v| U::lit(v.as_f64())).collect(),
            sample_ids: self.sample_ids.clone(),
            metric_hint: self.metric_hint,
        }
    }

    pub fn with_metric_hint(mut self, hint: MetricHint) -> Self {
        self.metric_hint = hint;
        self
    }
}
