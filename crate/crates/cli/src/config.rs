use std::path::{Path, PathBuf};

use embviz_core::data::{TabularFeaturizerConfig, TaskKind};
use embviz_eval::PipelineConfig;
use embviz_vlm::{EndpointConfig, PromptMode};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run needs, loadable from TOML or JSON.
///
/// Relative paths are resolved against the directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset manifest for `visualize` and `evaluate`.
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    /// Use the offline mock backend instead of `endpoint`.
    pub mock: bool,
    pub pipeline: PipelineConfig,
    pub endpoint: EndpointConfig,
    pub featurize: FeaturizeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            out: PathBuf::from("embviz-out"),
            mock: false,
            pipeline: PipelineConfig::default(),
            endpoint: EndpointConfig::default(),
            featurize: FeaturizeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturizeConfig {
    pub label_column: Option<String>,
    pub id_column: Option<String>,
    pub task: TaskKind,
    pub query_fraction: f64,
    /// Seeds the train/query split.
    pub seed: u64,
    pub featurizer: TabularFeaturizerConfig,
}

impl Default for FeaturizeConfig {
    fn default() -> Self {
        Self {
            label_column: None,
            id_column: None,
            task: TaskKind::Classification,
            query_fraction: 0.2,
            seed: 0,
            featurizer: TabularFeaturizerConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub mock: bool,
    pub mode: Option<PromptMode>,
    pub zoom_scale: Option<f64>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub analyze_reasoning: bool,
    pub label_column: Option<String>,
    pub id_column: Option<String>,
    pub task: Option<TaskKind>,
    pub query_fraction: Option<f64>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    /// Parses by extension: `.json` as JSON, anything else as TOML.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Invalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        let bad =
            |e: String| CliError::Invalid(format!("malformed config {}: {e}", path.display()));
        let mut cfg: RunConfig = if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"))
        {
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| bad(e.to_string()))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(d) = &mut cfg.dataset {
            resolve(base, d);
        }
        resolve(base, &mut cfg.out);
        if let Some(a) = &mut cfg.pipeline.artifacts_dir {
            resolve(base, a);
        }
        Ok(cfg)
    }

    /// Loads `path` if given, otherwise starts from defaults, then applies `o`.
    pub fn build(path: Option<&Path>, o: Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if o.dataset.is_some() {
            cfg.dataset = o.dataset;
        }
        if let Some(out) = o.out {
            cfg.out = out;
        }
        cfg.mock |= o.mock;
        if let Some(m) = o.mode {
            cfg.pipeline.mode = m;
        }
        if let Some(z) = o.zoom_scale {
            cfg.pipeline.zoom_scale = z;
        }
        if o.k.is_some() {
            cfg.pipeline.k = o.k;
        }
        if let Some(s) = o.seed {
            cfg.pipeline.seed = s;
            cfg.featurize.seed = s;
        }
        cfg.pipeline.analyze_reasoning |= o.analyze_reasoning;
        if o.label_column.is_some() {
            cfg.featurize.label_column = o.label_column;
        }
        if o.id_column.is_some() {
            cfg.featurize.id_column = o.id_column;
        }
        if let Some(t) = o.task {
            cfg.featurize.task = t;
        }
        if let Some(f) = o.query_fraction {
            cfg.featurize.query_fraction = f;
        }
        Ok(cfg)
    }

    /// Checks what `visualize` and `evaluate` need before any work starts.
    pub fn validate_for_run(&self) -> Result<&Path, CliError> {
        let dataset = self.dataset.as_deref().ok_or_else(|| {
            CliError::Invalid(
                "no dataset manifest given (use --dataset or `dataset` in the config)".into(),
            )
        })?;
        if !dataset.is_file() {
            return Err(CliError::Invalid(format!(
                "dataset manifest {} does not exist",
                dataset.display()
            )));
        }
        self.pipeline
            .validate()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        if !self.mock {
            self.endpoint
                .validate()
                .map_err(|e| CliError::Invalid(e.to_string()))?;
        }
        Ok(dataset)
    }
}
