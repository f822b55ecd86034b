use std::fmt::Write;

use embviz_core::data::{DatasetMetadata, Label, TaskKind};
use embviz_core::knn::NeighborSet;
use embviz_core::viz::{ColormapEntry, RenderedPlot};
use embviz_core::Scalar;
use serde::{Deserialize, Serialize};

use crate::VlmError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    BasicTsne,
    /// Plot plus a verbal list of the query's nearest neighbors.
    #[default]
    TsneKnn,
}

impl std::str::FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "basic_tsne" => Ok(PromptMode::BasicTsne),
            "tsne_knn" => Ok(PromptMode::TsneKnn),
            other => Err(format!(
                "unknown mode {other:?} (expected basic_tsne or tsne_knn)"
            )),
        }
    }
}

/// Overridable prompt wording. The structural parts (legend lines, neighbor
/// block, sentinel) are always generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptTemplate {
    pub system_text: String,
    pub intro_classification: String,
    pub intro_regression: String,
    pub answer_classification: String,
    pub answer_regression: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            system_text: "You analyze scatter plots of embedding spaces and answer with a single prediction.".into(),
            intro_classification: "The image is a 2-D t-SNE projection of a labeled dataset. Colored dots are \
                                   training samples, colored by class. The red star is the query sample whose \
                                   class you must predict."
                .into(),
            intro_regression: "The image is a 2-D t-SNE projection of a dataset with a numeric target. Colored \
                               dots are training samples, colored by target range. The red star is the query \
                               sample whose target you must predict."
                .into(),
            answer_classification: "Explain your reasoning briefly, then finish with one line of the form \
                                    FINAL ANSWER: <class>, naming exactly one class from the legend."
                .into(),
            answer_regression: "Explain your reasoning briefly, then finish with one line of the form \
                                FINAL ANSWER: <number>."
                .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
    /// PNG bytes.
    pub image: Vec<u8>,
    /// `(label, color)` for every legend entry of the image.
    pub classmap: Vec<(String, String)>,
    /// Full class palette of the dataset, for answer parsing.
    pub colormap: Vec<ColormapEntry>,
    pub mode: PromptMode,
    pub task_kind: TaskKind,
}

/// Renders structured metadata as plain text; `None` when there is nothing.
pub fn metadata_paragraph(meta: &DatasetMetadata) -> Option<String> {
    if meta.is_empty() {
        return None;
    }
    let mut out = String::new();
    if let Some(d) = &meta.description {
        out.push_str(d);
        out.push('\n');
    }
    for (title, map) in [("Features", &meta.features), ("Classes", &meta.classes)] {
        if !map.is_empty() {
            let _ = writeln!(out, "{title}:");
            for (k, v) in map {
                let _ = writeln!(out, "* {k}: {v}");
            }
        }
    }
    Some(out.trim_end().to_string())
}

fn class_entry(colormap: &[ColormapEntry], c: usize) -> (&str, &str) {
    colormap
        .iter()
        .find(|e| e.class_index == c)
        .map(|e| (e.class_name.as_str(), e.color_name.as_str()))
        .unwrap_or(("unknown", "unknown"))
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn neighbor_block<T: Scalar>(out: &mut String, ns: &NeighborSet<T>, colormap: &[ColormapEntry]) {
    let _ = writeln!(out, "Nearest neighbors:");
    for (rank, n) in ns.neighbors.iter().enumerate() {
        let d = n.distance.as_f64();
        match n.label {
            Label::Class(c) => {
                let (name, color) = class_entry(colormap, c);
                let _ = writeln!(out, "{}. {name} ({color}), distance {d:.3}", rank + 1);
            }
            Label::Value(v) => {
                let _ = writeln!(
                    out,
                    "{}. value {}, distance {d:.3}",
                    rank + 1,
                    format_number(v)
                );
            }
        }
    }
    if ns.per_class_stats.is_empty() {
        let mean: f64 = ns
            .neighbors
            .iter()
            .zip(&ns.weights)
            .filter_map(|(n, w)| n.label.value().map(|v| v * w.as_f64()))
            .sum();
        let _ = writeln!(
            out,
            "Distance-weighted mean of neighbor values: {}",
            format_number(mean)
        );
    } else {
        let _ = writeln!(out, "Neighbor summary:");
        for (&c, s) in &ns.per_class_stats {
            let (name, color) = class_entry(colormap, c);
            let _ = writeln!(
                out,
                "{name} ({color}): {} of {} neighbors, mean distance {:.3}",
                s.count,
                ns.k(),
                s.mean_distance.as_f64()
            );
        }
    }
}

/// [`build_prompt_with`] using the default template.
pub fn build_prompt<T: Scalar>(
    viz: &RenderedPlot,
    ns: Option<&NeighborSet<T>>,
    metadata: Option<&str>,
    mode: PromptMode,
    task_kind: TaskKind,
) -> Result<PromptBundle, VlmError> {
    build_prompt_with(
        viz,
        ns,
        metadata,
        mode,
        task_kind,
        &PromptTemplate::default(),
    )
}

/// Composes the prompt for one query. Pure: identical inputs give an
/// identical bundle.
pub fn build_prompt_with<T: Scalar>(
    viz: &RenderedPlot,
    ns: Option<&NeighborSet<T>>,
    metadata: Option<&str>,
    mode: PromptMode,
    task_kind: TaskKind,
    template: &PromptTemplate,
) -> Result<PromptBundle, VlmError> {
    let ns = match (mode, ns) {
        (PromptMode::TsneKnn, None) => return Err(VlmError::MissingNeighbors),
        (PromptMode::TsneKnn, Some(ns)) => Some(ns),
        (PromptMode::BasicTsne, _) => None,
    };
    let regression = task_kind == TaskKind::Regression;
    let sc = &viz.sidecar;

    let mut text = String::new();
    text.push_str(if regression {
        &template.intro_regression
    } else {
        &template.intro_classification
    });
    text.push_str("\n\nLegend:\n");
    for e in &sc.entries {
        let _ = writeln!(text, "\u{2013} {} ({})", e.label, e.color_name);
    }
    if let Some(ns) = ns {
        text.push('\n');
        neighbor_block(&mut text, ns, &sc.colormap);
    }
    if let Some(meta) = metadata.filter(|m| !m.trim().is_empty()) {
        let _ = write!(text, "\nDataset context:\n{meta}\n");
    }
    text.push('\n');
    text.push_str(if regression {
        &template.answer_regression
    } else {
        &template.answer_classification
    });

    Ok(PromptBundle {
        system_text: template.system_text.clone(),
        user_text: text,
        image: viz.png.clone(),
        classmap: sc
            .entries
            .iter()
            .map(|e| (e.label.clone(), e.color_name.clone()))
            .collect(),
        colormap: sc.colormap.clone(),
        mode,
        task_kind,
    })
}
