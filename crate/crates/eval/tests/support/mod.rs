//! Fixtures shared by the eval integration tests and the acceptance binary.
#![allow(dead_code)]

use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::post;
use axum::{Json, Router};
use embviz_core::data::{
    Dataset, DatasetMetadata, EmbeddingMatrix, Label, MetricHint, SampleRecord, Split, TaskKind,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Isotropic unit-variance blobs, class `c` shifted by `sep` along axis `c % d`.
/// Train rows come first, then query rows, each grouped by class.
pub fn blobs(
    train: &[usize],
    query: &[usize],
    d: usize,
    sep: f64,
    seed: u64,
) -> (Dataset, EmbeddingMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for (split, counts) in [(Split::Train, train), (Split::Query, query)] {
        for (c, &count) in counts.iter().enumerate() {
            for _ in 0..count {
                let mut r: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                r[c % d] += sep;
                rows.push(r);
                samples.push(SampleRecord {
                    id: format!(
                        "{}-{}",
                        if split == Split::Train { "t" } else { "q" },
                        samples.len()
                    ),
                    label: Some(Label::Class(c)),
                    split,
                });
            }
        }
    }
    let names = (0..train.len())
        .map(|c| format!("Class_{}", c + 1))
        .collect();
    let ids = samples.iter().map(|s| s.id.clone()).collect();
    let values = rows.concat();
    let emb = EmbeddingMatrix::new(rows.len(), d, values, ids, MetricHint::Euclidean).unwrap();
    let ds = Dataset::new(
        "blobs",
        TaskKind::Classification,
        samples,
        names,
        DatasetMetadata::default(),
    )
    .unwrap();
    (ds, emb)
}

/// Regression fixture: target is a smooth function of the first two coordinates.
pub fn regression(
    n_train: usize,
    n_query: usize,
    d: usize,
    seed: u64,
) -> (Dataset, EmbeddingMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_train + n_query;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let samples = rows
        .iter()
        .enumerate()
        .map(|(i, r)| SampleRecord {
            id: format!("r{i}"),
            label: Some(Label::Value(10.0 * r[0] + 5.0 * r[1])),
            split: if i < n_train {
                Split::Train
            } else {
                Split::Query
            },
        })
        .collect();
    let emb = EmbeddingMatrix::from_rows(&rows, MetricHint::Euclidean).unwrap();
    let ds = Dataset::new(
        "reg",
        TaskKind::Regression,
        samples,
        Vec::new(),
        DatasetMetadata::default(),
    )
    .unwrap();
    (ds, emb)
}

/// Distance-weighted KNN accuracy over the query split, written from scratch:
/// Euclidean distance, `k = min(30, ceil(n_train / 10))`, weight
/// `1 / (d + 1e-12)`, ties between classes to the smaller index and between
/// equidistant neighbors to the earlier train row.
pub fn oracle_knn_accuracy(ds: &Dataset, emb: &EmbeddingMatrix<f64>) -> f64 {
    let train: Vec<usize> = (0..ds.samples.len())
        .filter(|&i| ds.samples[i].split == Split::Train)
        .collect();
    let query: Vec<usize> = (0..ds.samples.len())
        .filter(|&i| ds.samples[i].split == Split::Query)
        .collect();
    let k = train.len().div_ceil(10).min(30);
    let class_of = |i: usize| match ds.samples[i].label {
        Some(Label::Class(c)) => c,
        _ => panic!("classification fixture"),
    };
    let mut correct = 0;
    for &q in &query {
        let mut dist: Vec<(f64, usize)> = train
            .iter()
            .map(|&t| {
                let d2: f64 = emb
                    .row(q)
                    .iter()
                    .zip(emb.row(t))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2.sqrt(), t)
            })
            .collect();
        dist.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut votes = vec![0.0; ds.class_names.len()];
        for &(d, t) in &dist[..k] {
            votes[class_of(t)] += 1.0 / (d + 1e-12);
        }
        let mut best = 0;
        for c in 1..votes.len() {
            if votes[c] > votes[best] {
                best = c;
            }
        }
        correct += usize::from(best == class_of(q));
    }
    correct as f64 / query.len() as f64
}

/// Starts a chat-completions stub answering every request with `status` and,
/// on 200, an assistant message of `text`. Returns its base URL.
pub async fn stub_endpoint(status: u16, text: &'static str) -> String {
    let app = Router::new().route(
        "/v1/chat/completions",
        post(move || async move {
            let code = StatusCode::from_u16(status).unwrap();
            if code.is_success() {
                Json(serde_json::json!({"choices": [{"message": {"content": text}}]}))
                    .into_response()
            } else {
                (code, "stub failure").into_response()
            }
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}
