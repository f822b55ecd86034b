use std::cell::Cell;
use std::path::Path;

use embviz_core::data::{stratified_subsample, Dataset, EmbeddingMatrix, Label, Split, TaskKind};
use embviz_core::dimred::{joint_layout, DimredError, Layout2D, TsneParams};
use embviz_core::knn::{default_k, knn_predict, knn_query, KnnError, KnnParams, NeighborSet};
use embviz_core::metrics::{
    analyze_reasoning, ci95, classification_metrics, regression_metrics, ReasoningRecord,
};
use embviz_core::parser::{parse_classification, parse_regression, ClassMap, ParseError};
use embviz_core::viz::{
    assign_palette, compute_zoom, render_regression_scatter, render_scatter, ColorMap,
    RenderedPlot, VizError,
};
use embviz_vlm::{
    build_prompt_with, metadata_paragraph, mock_vlm_respond, RawResponse, VlmClient, VlmError,
};
use futures::stream::{self, StreamExt};
use thiserror::Error;

use crate::{EvalReport, LayoutStrategy, PipelineConfig, QueryRecord};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset has no query samples")]
    NoQueries,
    #[error("dataset has no train samples")]
    NoTrain,
    #[error("query sample {0} has no label to score against")]
    UnlabeledQuery(String),
    #[error("embedding has {rows} rows but the dataset has {samples} samples")]
    RowMismatch { rows: usize, samples: usize },
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error(transparent)]
    Dimred(#[from] DimredError),
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Viz(#[from] VizError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Prompt(#[from] VlmError),
    #[error("{0}")]
    Data(String),
    #[error("writing artifacts to {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub enum Backend {
    /// Verbalized weighted KNN; offline and deterministic.
    Mock,
    Endpoint(VlmClient),
}

impl Backend {
    fn describe(&self) -> String {
        match self {
            Backend::Mock => "mock".into(),
            Backend::Endpoint(c) => format!("{} @ {}", c.config().model, c.config().base_url),
        }
    }

    fn concurrency(&self) -> usize {
        match self {
            Backend::Mock => 1,
            Backend::Endpoint(c) => c.config().max_concurrency,
        }
    }
}

/// Everything a single query needs that is shared across queries.
struct Context<'a> {
    cfg: &'a PipelineConfig,
    task_kind: TaskKind,
    train: EmbeddingMatrix<f64>,
    train_labels: Vec<Label>,
    queries: EmbeddingMatrix<f64>,
    query_ids: Vec<String>,
    query_truth: Vec<Label>,
    knn: KnnParams,
    tsne: TsneParams<f64>,
    shared: Option<Layout2D<f64>>,
    cmap: Option<ColorMap>,
    classmap: Option<ClassMap>,
    metadata: Option<String>,
    /// Mean train target, the regression answer for unparseable responses.
    fallback_value: f64,
}

fn safe_file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), EvalError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One query's plot and the neighbor set it was drawn from.
#[derive(Debug, Clone)]
pub struct QueryPlot {
    pub query_id: String,
    pub neighbors: NeighborSet<f64>,
    pub knn_prediction: Label,
    pub plot: RenderedPlot,
}

/// Output of [`render_queries`].
#[derive(Debug, Clone)]
pub struct Visualization {
    /// The joint layout; `None` under [`LayoutStrategy::PerQuery`].
    pub shared_layout: Option<Layout2D<f64>>,
    /// Layout row ids: the kept train samples, then the queries.
    pub layout_ids: Vec<String>,
    pub perplexity: f64,
    pub k: usize,
    pub plots: Vec<QueryPlot>,
}

impl Context<'_> {
    /// Layout (when per-query), neighbor search and rendering for query `j`.
    fn render(&self, j: usize) -> Result<QueryPlot, EvalError> {
        let n_train = self.train.n();
        let own;
        let (layout, qi) = match &self.shared {
            Some(l) => (l, n_train + j),
            None => {
                let q = self
                    .queries
                    .select_rows(&[j])
                    .map_err(|e| EvalError::Data(e.to_string()))?;
                own = joint_layout(&self.train, &self.train_labels, Some(&q), &self.tsne)?;
                (&own, n_train)
            }
        };
        let id = &self.query_ids[j];
        let neighbors = knn_query(
            &self.train,
            &self.train_labels,
            id,
            self.queries.row(j),
            &self.knn,
        )?;
        let knn_prediction = knn_predict(&neighbors, self.task_kind)?.label;
        // Train rows come first in every layout, so neighbor rows index the layout directly.
        let nbrs = neighbors.rows();
        let vp = compute_zoom(
            layout,
            qi,
            &nbrs,
            self.cfg.zoom_scale,
            self.cfg.margin_fraction,
        )?;
        let plot = match &self.cmap {
            Some(cmap) => render_scatter(layout, qi, &nbrs, cmap, &vp, &self.cfg.render)?,
            None => render_regression_scatter(layout, qi, &nbrs, &vp, &self.cfg.render)?,
        };
        Ok(QueryPlot {
            query_id: id.clone(),
            neighbors,
            knn_prediction,
            plot,
        })
    }

    /// Runs one query. Endpoint failures are recorded, everything else aborts.
    async fn process(
        &self,
        j: usize,
        backend: &Backend,
        aborted: &Cell<bool>,
    ) -> Result<QueryRecord, EvalError> {
        let QueryPlot {
            query_id: id,
            neighbors: ns,
            knn_prediction,
            plot,
        } = self.render(j)?;
        let bundle = build_prompt_with(
            &plot,
            Some(&ns),
            self.metadata.as_deref(),
            self.cfg.mode,
            self.task_kind,
            &self.cfg.template,
        )?;

        let response: Result<RawResponse, String> = if aborted.get() {
            Err("skipped: evaluation aborted after an endpoint failure".into())
        } else {
            match backend {
                Backend::Mock => Ok(mock_vlm_respond(&bundle, &ns)),
                Backend::Endpoint(client) => match client.query(&bundle).await {
                    Ok(r) => Ok(r),
                    Err(e) if e.is_endpoint_failure() => {
                        if matches!(e, VlmError::RetriesExhausted { .. } | VlmError::Auth { .. }) {
                            aborted.set(true);
                        }
                        Err(e.to_string())
                    }
                    Err(e) => return Err(e.into()),
                },
            }
        };

        if let Some(dir) = &self.cfg.artifacts_dir {
            let stem = artifact_stem(j, &id);
            write_artifact(dir, &format!("{stem}.png"), &plot.png)?;
            let sidecar = serde_json::to_vec_pretty(&plot.sidecar).expect("sidecar serializes");
            write_artifact(dir, &format!("{stem}.sidecar.json"), &sidecar)?;
            let prompt = format!("{}\n\n{}", bundle.system_text, bundle.user_text);
            write_artifact(dir, &format!("{stem}.prompt.txt"), prompt.as_bytes())?;
            let text = match &response {
                Ok(r) => r.text.clone(),
                Err(e) => format!("ERROR: {e}"),
            };
            write_artifact(dir, &format!("{stem}.response.txt"), text.as_bytes())?;
        }

        let truth = self.query_truth[j];
        let mut record = QueryRecord {
            query_id: id,
            truth,
            prediction: None,
            channel: None,
            knn_prediction,
            correct: None,
            abs_error: None,
            unparseable: false,
            latency_secs: 0.0,
            retries: 0,
            raw_text: None,
            error: None,
        };
        let r = match response {
            Ok(r) => r,
            Err(e) => {
                record.error = Some(e);
                return Ok(record);
            }
        };
        let parsed = match &self.classmap {
            Some(cm) => parse_classification(&r.text, cm),
            None => parse_regression(&r.text),
        };
        match parsed {
            Ok(p) => {
                record.prediction = Some(p.value);
                record.channel = Some(p.channel);
            }
            Err(_) => record.unparseable = true,
        }
        match truth {
            Label::Class(_) => record.correct = Some(record.prediction == Some(truth)),
            Label::Value(t) => {
                let v = record
                    .prediction
                    .and_then(Label::value)
                    .unwrap_or(self.fallback_value);
                record.abs_error = Some((v - t).abs());
            }
        }
        record.latency_secs = r.latency_secs;
        record.retries = r.retries;
        record.raw_text = Some(r.text);
        Ok(record)
    }
}

/// Validation, train subsampling, the shared layout and the class/color maps.
fn prepare<'a>(
    ds: &Dataset,
    emb: &EmbeddingMatrix<f64>,
    cfg: &'a PipelineConfig,
) -> Result<Context<'a>, EvalError> {
    cfg.validate()?;
    if emb.n() != ds.len() {
        return Err(EvalError::RowMismatch {
            rows: emb.n(),
            samples: ds.len(),
        });
    }
    let query_idx = ds.indices_in(Split::Query);
    if query_idx.is_empty() {
        return Err(EvalError::NoQueries);
    }
    let query_truth = query_idx
        .iter()
        .map(|&i| {
            ds.samples[i]
                .label
                .ok_or_else(|| EvalError::UnlabeledQuery(ds.samples[i].id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let all_train = ds.indices_in(Split::Train);
    if all_train.is_empty() {
        return Err(EvalError::NoTrain);
    }
    let all_labels: Vec<Label> = all_train
        .iter()
        .map(|&i| ds.samples[i].label.expect("train samples are labeled"))
        .collect();
    let kept = stratified_subsample(&all_labels, cfg.max_train, cfg.seed);
    let train_idx: Vec<usize> = kept.iter().map(|&k| all_train[k]).collect();
    let train_labels: Vec<Label> = kept.iter().map(|&k| all_labels[k]).collect();

    let metric = cfg.metric.unwrap_or(emb.metric_hint());
    let data_err = |e: embviz_core::data::DataError| EvalError::Data(e.to_string());
    let train = emb
        .select_rows(&train_idx)
        .map_err(data_err)?
        .with_metric_hint(metric);
    let queries = emb
        .select_rows(&query_idx)
        .map_err(data_err)?
        .with_metric_hint(metric);
    let n_train = train.n();
    let k = cfg.k.unwrap_or_else(|| default_k(n_train)).min(n_train);

    let mut tsne = cfg.tsne.clone();
    tsne.seed = cfg.seed;
    let per_layout = n_train
        + match cfg.layout {
            LayoutStrategy::Shared => queries.n(),
            LayoutStrategy::PerQuery => 1,
        };
    // Small datasets cannot support the configured perplexity.
    let max_perplexity = ((per_layout as f64 - 1.0) / 3.0).max(1.0);
    tsne.perplexity = tsne.perplexity.min(max_perplexity);

    let shared = match cfg.layout {
        LayoutStrategy::Shared => Some(joint_layout(&train, &train_labels, Some(&queries), &tsne)?),
        LayoutStrategy::PerQuery => None,
    };
    let (cmap, classmap) = match ds.task_kind {
        TaskKind::Classification => {
            let cmap = assign_palette(&ds.class_names)?;
            let classmap = ClassMap::from_color_map(&cmap)?;
            (Some(cmap), Some(classmap))
        }
        TaskKind::Regression => (None, None),
    };
    let fallback_value = {
        let vals: Vec<f64> = train_labels.iter().filter_map(|l| l.value()).collect();
        if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    if let Some(dir) = &cfg.artifacts_dir {
        std::fs::create_dir_all(dir).map_err(|source| EvalError::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }

    Ok(Context {
        cfg,
        task_kind: ds.task_kind,
        train,
        train_labels,
        query_ids: query_idx
            .iter()
            .map(|&i| ds.samples[i].id.clone())
            .collect(),
        queries,
        query_truth,
        knn: KnnParams::new(k, metric),
        shared,
        cmap,
        classmap,
        metadata: cfg
            .include_metadata
            .then(|| metadata_paragraph(&ds.metadata))
            .flatten(),
        fallback_value,
        tsne,
    })
}
/// Runs the full pipeline over every query sample of `ds`.
///
/// Endpoint failures do not abort with an error: once a request exhausts its
/// retries (or is rejected for auth), remaining queries are skipped and the
/// report is returned with `incomplete` set. With the mock backend the report
/// is a pure function of the inputs.
pub async fn run_evaluation(
    ds: &Dataset,
    emb: &EmbeddingMatrix<f64>,
    cfg: &PipelineConfig,
    backend: &Backend,
) -> Result<EvalReport, EvalError> {
    let ctx = prepare(ds, emb, cfg)?;
    let aborted = Cell::new(false);
    let results: Vec<Result<QueryRecord, EvalError>> = stream::iter(0..ctx.query_ids.len())
        .map(|j| ctx.process(j, backend, &aborted))
        .buffered(backend.concurrency())
        .collect()
        .await;
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(summarize(ds, &ctx, backend, records))
}

/// Layouts, neighbor sets and plots for every query, without prompting.
pub fn render_queries(
    ds: &Dataset,
    emb: &EmbeddingMatrix<f64>,
    cfg: &PipelineConfig,
) -> Result<Visualization, EvalError> {
    let ctx = prepare(ds, emb, cfg)?;
    let plots = (0..ctx.query_ids.len())
        .map(|j| ctx.render(j))
        .collect::<Result<Vec<_>, _>>()?;
    let layout_ids = ctx
        .train
        .sample_ids()
        .iter()
        .chain(&ctx.query_ids)
        .cloned()
        .collect();
    Ok(Visualization {
        perplexity: ctx.tsne.perplexity,
        k: ctx.knn.k,
        shared_layout: ctx.shared,
        layout_ids,
        plots,
    })
}

/// File stem for query `j`'s artifacts; the index keeps stems unique after sanitizing.
pub fn artifact_stem(j: usize, query_id: &str) -> String {
    format!("{j:05}_{}", safe_file_stem(query_id))
}

fn summarize(
    ds: &Dataset,
    ctx: &Context<'_>,
    backend: &Backend,
    records: Vec<QueryRecord>,
) -> EvalReport {
    let cfg = ctx.cfg;
    let scored: Vec<&QueryRecord> = records.iter().filter(|r| !r.failed()).collect();
    let n_failed = records.len() - scored.len();
    let n_unparseable = scored.iter().filter(|r| r.unparseable).count();
    let mut report = EvalReport {
        dataset: ds.name.clone(),
        task_kind: ds.task_kind,
        mode: cfg.mode,
        backend: backend.describe(),
        layout: cfg.layout,
        k: ctx.knn.k,
        metric: ctx.knn.metric,
        zoom_scale: cfg.zoom_scale,
        perplexity: ctx.tsne.perplexity,
        seed: cfg.seed,
        n_train: ctx.train.n(),
        n_queries: records.len(),
        n_scored: scored.len(),
        n_failed,
        n_unparseable,
        unparseable_policy: match ds.task_kind {
            TaskKind::Classification => "scored as incorrect".into(),
            TaskKind::Regression => "scored as the train-target mean".into(),
        },
        incomplete: n_failed > 0,
        classification: None,
        regression: None,
        ci95: None,
        knn_classification: None,
        knn_regression: None,
        reasoning: None,
        records: Vec::new(),
    };

    match ds.task_kind {
        TaskKind::Classification if !scored.is_empty() => {
            let truth: Vec<usize> = scored.iter().filter_map(|r| r.truth.class()).collect();
            let pred: Vec<Option<usize>> = scored
                .iter()
                .map(|r| r.prediction.and_then(Label::class))
                .collect();
            let knn: Vec<Option<usize>> = scored.iter().map(|r| r.knn_prediction.class()).collect();
            let n_classes = ds.n_classes();
            report.classification = classification_metrics(&truth, &pred, n_classes).ok();
            report.knn_classification = classification_metrics(&truth, &knn, n_classes).ok();
            report.ci95 = report
                .classification
                .map(|m| ci95(m.accuracy, scored.len()));
        }
        TaskKind::Regression if scored.len() >= 2 => {
            let truth: Vec<f64> = scored.iter().filter_map(|r| r.truth.value()).collect();
            let pred: Vec<f64> = scored
                .iter()
                .map(|r| {
                    r.prediction
                        .and_then(Label::value)
                        .unwrap_or(ctx.fallback_value)
                })
                .collect();
            let knn: Vec<f64> = scored
                .iter()
                .filter_map(|r| r.knn_prediction.value())
                .collect();
            report.regression = regression_metrics(&truth, &pred).ok();
            report.knn_regression = regression_metrics(&truth, &knn).ok();
            report.ci95 = report
                .regression
                .and_then(|m| m.r2)
                .map(|r2| ci95(r2.min(1.0), scored.len()));
        }
        _ => {}
    }

    if cfg.analyze_reasoning && !scored.is_empty() {
        // Regression answers count as correct when at most the median absolute error.
        let median_err = {
            let mut e: Vec<f64> = scored.iter().filter_map(|r| r.abs_error).collect();
            e.sort_by(f64::total_cmp);
            e.get(e.len() / 2).copied().unwrap_or(0.0)
        };
        let reasoning: Vec<ReasoningRecord> = scored
            .iter()
            .map(|r| ReasoningRecord {
                text: r.raw_text.clone().unwrap_or_default(),
                correct: r
                    .correct
                    .unwrap_or_else(|| r.abs_error.is_some_and(|e| e <= median_err)),
            })
            .collect();
        let colors: Option<Vec<&str>> = ctx
            .cmap
            .as_ref()
            .map(|c| c.entries().iter().map(|e| e.color.name).collect());
        report.reasoning = Some(analyze_reasoning(&reasoning, colors.as_deref()));
    }
    report.records = records;
    report
}
