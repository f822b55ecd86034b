use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classification,
    Regression,
}

impl std::str::FromStr for TaskKind {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classification" => Ok(TaskKind::Classification),
            "regression" => Ok(TaskKind::Regression),
            other => Err(DataError::UnknownTaskKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Query,
}

/// A supervised target: a class index or a numeric value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Class(usize),
    Value(f64),
}

impl Label {
    pub fn class(self) -> Option<usize> {
        match self {
            Label::Class(c) => Some(c),
            Label::Value(_) => None,
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Label::Value(v) => Some(v),
            Label::Class(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub label: Option<Label>,
    pub split: Split,
}

/// Free-text descriptions handed to the model alongside the plot.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub features: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub classes: BTreeMap<String, String>,
}

impl DatasetMetadata {
    pub fn is_empty(&self) -> bool {
        self.description.is_none() && self.features.is_empty() && self.classes.is_empty()
    }
}

/// Labeled samples with their train/query assignment.
///
/// Construction through [`Dataset::new`] enforces unique ids, class indices
/// within `class_names`, labels on every train sample and empty
/// `class_names` for regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub task_kind: TaskKind,
    pub samples: Vec<SampleRecord>,
    pub class_names: Vec<String>,
    #[serde(default)]
    pub metadata: DatasetMetadata,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        task_kind: TaskKind,
        samples: Vec<SampleRecord>,
        class_names: Vec<String>,
        metadata: DatasetMetadata,
    ) -> Result<Self, DataError> {
        let ds = Dataset {
            name: name.into(),
            task_kind,
            samples,
            class_names,
            metadata,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.task_kind == TaskKind::Regression && !self.class_names.is_empty() {
            return Err(DataError::Shape(
                "regression datasets must not declare class_names".into(),
            ));
        }
        if self.task_kind == TaskKind::Classification && self.class_names.is_empty() {
            return Err(DataError::Shape(
                "classification datasets need at least one class name".into(),
            ));
        }
        let mut seen = HashSet::with_capacity(self.samples.len());
        for s in &self.samples {
            if !seen.insert(s.id.as_str()) {
                return Err(DataError::DuplicateId(s.id.clone()));
            }
            let bad = |message: &str| DataError::InvalidLabel {
                id: s.id.clone(),
                message: message.to_string(),
            };
            match (self.task_kind, s.label) {
                (_, None) if s.split == Split::Train => {
                    return Err(bad("train samples must be labeled"))
                }
                (_, None) => {}
                (TaskKind::Classification, Some(Label::Class(c))) => {
                    if c >= self.class_names.len() {
                        return Err(bad(&format!(
                            "class index {c} out of range for {} classes",
                            self.class_names.len()
                        )));
                    }
                }
                (TaskKind::Regression, Some(Label::Value(v))) => {
                    if !v.is_finite() {
                        return Err(bad("regression target is not finite"));
                    }
                }
                (TaskKind::Classification, Some(Label::Value(_))) => {
                    return Err(bad("classification label must be a class index"))
                }
                (TaskKind::Regression, Some(Label::Class(_))) => {
                    return Err(bad("regression label must be a number"))
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn indices_in(&self, split: Split) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }
}
