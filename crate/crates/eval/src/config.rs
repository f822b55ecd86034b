use std::path::PathBuf;

use embviz_core::data::MetricHint;
use embviz_core::dimred::TsneParams;
use embviz_core::viz::{RenderOptions, DEFAULT_MARGIN_FRACTION};
use embviz_vlm::{PromptMode, PromptTemplate};
use serde::{Deserialize, Serialize};

use crate::EvalError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutStrategy {
    /// One t-SNE fit holding every train and query row.
    #[default]
    Shared,
    /// A separate fit of the train rows plus one query, per query.
    PerQuery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: PromptMode,
    pub tsne: TsneParams<f64>,
    /// Neighbor count; `None` means `default_k(n_train)`.
    pub k: Option<usize>,
    /// Neighbor metric; `None` follows the embedding's hint.
    pub metric: Option<MetricHint>,
    pub zoom_scale: f64,
    pub margin_fraction: f64,
    pub render: RenderOptions,
    pub layout: LayoutStrategy,
    /// Stratified cap on train rows entering the layout and neighbor search.
    pub max_train: usize,
    /// Seeds subsampling and the layout.
    pub seed: u64,
    pub include_metadata: bool,
    pub template: PromptTemplate,
    pub analyze_reasoning: bool,
    /// When set, each query's PNG, sidecar, prompt and response are written here.
    pub artifacts_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: PromptMode::TsneKnn,
            tsne: TsneParams::default(),
            k: None,
            metric: None,
            zoom_scale: 2.0,
            margin_fraction: DEFAULT_MARGIN_FRACTION,
            render: RenderOptions::default(),
            layout: LayoutStrategy::Shared,
            max_train: 2000,
            seed: 0,
            include_metadata: true,
            template: PromptTemplate::default(),
            analyze_reasoning: false,
            artifacts_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.zoom_scale >= 1.0 && self.zoom_scale.is_finite()) {
            return Err(EvalError::Config(format!(
                "zoom_scale {} must be >= 1",
                self.zoom_scale
            )));
        }
        if self.k == Some(0) {
            return Err(EvalError::Config("k must be >= 1".into()));
        }
        if self.max_train == 0 {
            return Err(EvalError::Config("max_train must be >= 1".into()));
        }
        self.tsne.validate()?;
        self.render.validate()?;
        Ok(())
    }
}
