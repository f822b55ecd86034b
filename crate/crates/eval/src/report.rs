use std::fmt::Write;

use embviz_core::data::{Label, MetricHint, TaskKind};
use embviz_core::metrics::{ClassificationMetrics, ReasoningStats, RegressionMetrics};
use embviz_core::parser::Channel;
use embviz_vlm::PromptMode;
use serde::{Deserialize, Serialize};

use crate::LayoutStrategy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub truth: Label,
    /// Parsed answer; `None` when unparseable or the request failed.
    pub prediction: Option<Label>,
    pub channel: Option<Channel>,
    /// Distance-weighted KNN decision for the same query.
    pub knn_prediction: Label,
    /// Classification only; unparseable counts as wrong.
    pub correct: Option<bool>,
    /// Regression only; unparseable answers use the train-target mean.
    pub abs_error: Option<f64>,
    pub unparseable: bool,
    pub latency_secs: f64,
    pub retries: u32,
    pub raw_text: Option<String>,
    /// Endpoint failure, if the query never got an answer.
    pub error: Option<String>,
}

impl QueryRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub task_kind: TaskKind,
    pub mode: PromptMode,
    pub backend: String,
    pub layout: LayoutStrategy,
    pub k: usize,
    pub metric: MetricHint,
    pub zoom_scale: f64,
    pub perplexity: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_queries: usize,
    /// Queries with an answer (parseable or not).
    pub n_scored: usize,
    pub n_failed: usize,
    pub n_unparseable: usize,
    pub unparseable_policy: String,
    /// Set when any query failed at the endpoint.
    pub incomplete: bool,
    pub classification: Option<ClassificationMetrics>,
    pub regression: Option<RegressionMetrics<f64>>,
    /// Half-width of the 95% normal-approximation interval of the headline score.
    pub ci95: Option<f64>,
    /// The same metrics for the plain KNN decisions, over the same queries.
    pub knn_classification: Option<ClassificationMetrics>,
    pub knn_regression: Option<RegressionMetrics<f64>>,
    pub reasoning: Option<ReasoningStats>,
    pub records: Vec<QueryRecord>,
}

impl EvalReport {
    pub fn accuracy(&self) -> Option<f64> {
        self.classification.map(|m| m.accuracy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }

    /// Plain-text summary for terminals and logs.
    pub fn to_table(&self) -> String {
        let mut t = String::new();
        let row = |t: &mut String, k: &str, v: String| {
            let _ = writeln!(t, "{k:<22} {v}");
        };
        row(&mut t, "dataset", self.dataset.clone());
        row(&mut t, "backend", self.backend.clone());
        row(&mut t, "mode", format!("{:?}", self.mode));
        row(
            &mut t,
            "k / metric",
            format!("{} / {:?}", self.k, self.metric),
        );
        row(
            &mut t,
            "train / queries",
            format!("{} / {}", self.n_train, self.n_queries),
        );
        row(&mut t, "failed", self.n_failed.to_string());
        row(
            &mut t,
            "unparseable",
            format!("{} ({})", self.n_unparseable, self.unparseable_policy),
        );
        let ci = self
            .ci95
            .map(|c| format!(" \u{b1} {c:.4}"))
            .unwrap_or_default();
        if let Some(m) = self.classification {
            row(&mut t, "accuracy", format!("{:.4}{ci}", m.accuracy));
            row(
                &mut t,
                "balanced accuracy",
                format!("{:.4}", m.balanced_accuracy),
            );
            row(&mut t, "macro F1", format!("{:.4}", m.macro_f1));
        }
        if let Some(m) = self.knn_classification {
            row(&mut t, "knn accuracy", format!("{:.4}", m.accuracy));
        }
        if let Some(m) = self.regression {
            let r2 =
                m.r2.map(|v| format!("{v:.4}{ci}"))
                    .unwrap_or_else(|| "undefined".into());
            row(&mut t, "R2 (floored)", r2);
            row(&mut t, "MAE", format!("{:.4}", m.mae));
            row(&mut t, "RMSE", format!("{:.4}", m.rmse));
        }
        if let Some(m) = self.knn_regression {
            let r2 =
                m.r2.map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "undefined".into());
            row(&mut t, "knn R2 (floored)", r2);
        }
        if let Some(r) = &self.reasoning {
            for (name, s) in [("correct", &r.correct), ("incorrect", &r.incorrect)] {
                row(
                    &mut t,
                    &format!("reasoning/{name}"),
                    format!(
                        "n={} chars={:.1} words={:.1} colors={:.2} distance={:.2}",
                        s.n, s.mean_chars, s.mean_words, s.color_mentions, s.distance_rate
                    ),
                );
            }
        }
        if self.incomplete {
            row(&mut t, "status", "INCOMPLETE".into());
        }
        t
    }
}
