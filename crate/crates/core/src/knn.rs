//! Exact k-nearest-neighbor search in the raw embedding space and the
//! distance-weighted vote used both as a baseline and by the mock model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{EmbeddingMatrix, Label, MetricHint, TaskKind};
use crate::Scalar;

/// Added to distances before inversion so exact duplicates get a finite weight.
pub const WEIGHT_EPSILON: f64 = 1e-12;

const MAX_DEFAULT_K: usize = 30;

#[derive(Debug, Error, PartialEq)]
pub enum KnnError {
    #[error("dimension mismatch: train has d = {train}, query has d = {query}")]
    DimensionMismatch { train: usize, query: usize },
    #[error("k = {k} outside 1..={n_train}")]
    InvalidK { k: usize, n_train: usize },
    #[error("zero-norm vector ({which}) under cosine metric")]
    ZeroNorm { which: String },
    #[error("{labels} labels for {rows} train rows")]
    LabelCount { labels: usize, rows: usize },
    #[error("empty neighbor set")]
    Empty,
    #[error("neighbor label does not match task kind")]
    LabelKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    pub metric: MetricHint,
}

impl KnnParams {
    pub fn new(k: usize, metric: MetricHint) -> Self {
        Self { k, metric }
    }
}

/// `min(30, ceil(n_train / 10))`, never below 1.
pub fn default_k(n_train: usize) -> usize {
    n_train.div_ceil(10).clamp(1, MAX_DEFAULT_K)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor<T> {
    pub row: usize,
    pub distance: T,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats<T> {
    pub count: usize,
    pub mean_distance: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet<T> {
    pub query_id: String,
    /// Ascending by distance, ties broken by row index.
    pub neighbors: Vec<Neighbor<T>>,
    /// Inverse-distance weights normalized to sum to one.
    pub weights: Vec<T>,
    /// Only populated for classification labels.
    pub per_class_stats: BTreeMap<usize, ClassStats<T>>,
}

impl<T: Scalar> NeighborSet<T> {
    pub fn k(&self) -> usize {
        self.neighbors.len()
    }

    pub fn rows(&self) -> Vec<usize> {
        self.neighbors.iter().map(|n| n.row).collect()
    }

    /// Builds weights and per-class summaries for already-sorted neighbors.
    pub fn from_sorted(query_id: impl Into<String>, neighbors: Vec<Neighbor<T>>) -> Self {
        let eps = T::lit(WEIGHT_EPSILON);
        let raw: Vec<T> = neighbors
            .iter()
            .map(|n| T::one() / (n.distance + eps))
            .collect();
        let total: T = raw.iter().copied().sum();
        let weights = raw.into_iter().map(|w| w / total).collect();

        let mut per_class_stats: BTreeMap<usize, ClassStats<T>> = BTreeMap::new();
        for n in &neighbors {
            if let Label::Class(c) = n.label {
                let entry = per_class_stats.entry(c).or_insert(ClassStats {
                    count: 0,
                    mean_distance: T::zero(),
                });
                entry.count += 1;
                entry.mean_distance += n.distance;
            }
        }
        for s in per_class_stats.values_mut() {
            s.mean_distance /= T::from_count(s.count);
        }
        Self {
            query_id: query_id.into(),
            neighbors,
            weights,
            per_class_stats,
        }
    }
}

fn norm<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Distance between two rows under `metric`. Cosine distance is
/// `1 - cos(a, b)`, clamped at zero.
pub fn distance<T: Scalar>(a: &[T], b: &[T], metric: MetricHint) -> T {
    match metric {
        MetricHint::Euclidean => a
            .iter()
            .zip(b)
            .map(|(&x, &y)| (x - y) * (x - y))
            .sum::<T>()
            .sqrt(),
        MetricHint::Cosine => {
            let dot: T = a.iter().zip(b).map(|(&x, &y)| x * y).sum();
            (T::one() - dot / (norm(a) * norm(b))).max(T::zero())
        }
    }
}

/// Exact k nearest training rows to `q`.
pub fn knn_query<T: Scalar>(
    train: &EmbeddingMatrix<T>,
    labels: &[Label],
    query_id: &str,
    q: &[T],
    params: &KnnParams,
) -> Result<NeighborSet<T>, KnnError> {
    if q.len() != train.d() {
        return Err(KnnError::DimensionMismatch {
            train: train.d(),
            query: q.len(),
        });
    }
    if labels.len() != train.n() {
        return Err(KnnError::LabelCount {
            labels: labels.len(),
            rows: train.n(),
        });
    }
    if params.k == 0 || params.k > train.n() {
        return Err(KnnError::InvalidK {
            k: params.k,
            n_train: train.n(),
        });
    }
    if params.metric == MetricHint::Cosine {
        if norm(q) == T::zero() {
            return Err(KnnError::ZeroNorm {
                which: format!("query {query_id}"),
            });
        }
        if let Some(i) = train.rows().position(|r| norm(r) == T::zero()) {
            return Err(KnnError::ZeroNorm {
                which: format!("train row {i}"),
            });
        }
    }
    let mut scored: Vec<(T, usize)> = train
        .rows()
        .enumerate()
        .map(|(i, r)| (distance(r, q, params.metric), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_order(&b.0).then(a.1.cmp(&b.1)));
    let neighbors = scored
        .into_iter()
        .take(params.k)
        .map(|(distance, row)| Neighbor {
            row,
            distance,
            label: labels[row],
        })
        .collect();
    Ok(NeighborSet::from_sorted(query_id, neighbors))
}

/// Outcome of a distance-weighted vote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnVote {
    pub label: Label,
    /// Winning class's weight share; for regression `1 / (1 + weighted std)`.
    pub confidence: f64,
}

pub fn knn_predict<T: Scalar>(
    ns: &NeighborSet<T>,
    task_kind: TaskKind,
) -> Result<KnnVote, KnnError> {
    if ns.neighbors.is_empty() {
        return Err(KnnError::Empty);
    }
    match task_kind {
        TaskKind::Classification => {
            let mut votes: BTreeMap<usize, f64> = BTreeMap::new();
            for (n, &w) in ns.neighbors.iter().zip(&ns.weights) {
                let c = n.label.class().ok_or(KnnError::LabelKind)?;
                *votes.entry(c).or_insert(0.0) += w.as_f64();
            }
            // BTreeMap iterates by class index, so strict `>` keeps the smaller index on ties.
            let (class, share) =
                votes
                    .into_iter()
                    .fold((usize::MAX, f64::NEG_INFINITY), |best, (c, w)| {
                        if w > best.1 {
                            (c, w)
                        } else {
                            best
                        }
                    });
            Ok(KnnVote {
                label: Label::Class(class),
                confidence: share,
            })
        }
        TaskKind::Regression => {
            let mut mean = 0.0;
            for (n, &w) in ns.neighbors.iter().zip(&ns.weights) {
                mean += w.as_f64() * n.label.value().ok_or(KnnError::LabelKind)?;
            }
            let var: f64 = ns
                .neighbors
                .iter()
                .zip(&ns.weights)
                .map(|(n, &w)| w.as_f64() * (n.label.value().unwrap_or(mean) - mean).powi(2))
                .sum();
            Ok(KnnVote {
                label: Label::Value(mean),
                confidence: 1.0 / (1.0 + var.sqrt()),
            })
        }
    }
}
