//! JSON manifest plus raw little-endian `f32` payload.
//!
//! The payload is `n * d` floats, row-major, with no header. Rows follow the
//! order of `samples` in the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    DataError, Dataset, DatasetMetadata, EmbeddingMatrix, Label, MetricHint, SampleRecord, Split,
    TaskKind,
};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSample {
    pub id: String,
    pub label: Option<serde_json::Number>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub task_kind: String,
    #[serde(default)]
    pub class_names: Vec<String>,
    pub samples: Vec<ManifestSample>,
    pub embedding_file: String,
    pub embedding_dim: usize,
    #[serde(default)]
    pub metric_hint: MetricHint,
    #[serde(default, skip_serializing_if = "DatasetMetadata::is_empty")]
    pub metadata: DatasetMetadata,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn label_from_json(
    id: &str,
    task_kind: TaskKind,
    n: &serde_json::Number,
) -> Result<Label, DataError> {
    let bad = |message: String| DataError::InvalidLabel {
        id: id.to_string(),
        message,
    };
    match task_kind {
        TaskKind::Classification => n
            .as_u64()
            .and_then(|v| usize::try_from(v).ok())
            .map(Label::Class)
            .ok_or_else(|| bad(format!("class label {n} is not a non-negative integer"))),
        TaskKind::Regression => n
            .as_f64()
            .map(Label::Value)
            .ok_or_else(|| bad(format!("target {n} is not representable"))),
    }
}

fn label_to_json(label: Label) -> Option<serde_json::Number> {
    match label {
        Label::Class(c) => Some((c as u64).into()),
        Label::Value(v) => serde_json::Number::from_f64(v),
    }
}

/// Reads a manifest and its payload, validating both.
pub fn load_dataset<T: Scalar>(
    manifest_path: impl AsRef<Path>,
) -> Result<(Dataset, EmbeddingMatrix<T>), DataError> {
    let manifest_path = manifest_path.as_ref();
    let text = fs::read_to_string(manifest_path).map_err(io_err(manifest_path))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| DataError::Manifest {
        path: manifest_path.to_path_buf(),
        message: e.to_string(),
    })?;
    let task_kind: TaskKind = manifest.task_kind.parse()?;

    let samples = manifest
        .samples
        .iter()
        .map(|s| {
            let label = s
                .label
                .as_ref()
                .map(|n| label_from_json(&s.id, task_kind, n))
                .transpose()?;
            Ok(SampleRecord {
                id: s.id.clone(),
                label,
                split: s.split,
            })
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    let ds = Dataset::new(
        manifest.name.clone(),
        task_kind,
        samples,
        manifest.class_names.clone(),
        manifest.metadata.clone(),
    )?;

    let payload_path = payload_path(manifest_path, &manifest.embedding_file);
    let bytes = fs::read(&payload_path).map_err(io_err(&payload_path))?;
    let d = manifest.embedding_dim;
    if d == 0 {
        return Err(DataError::Shape("embedding_dim must be >= 1".into()));
    }
    if bytes.len() % (4 * d) != 0 {
        return Err(DataError::Shape(format!(
            "payload of {} bytes is not a whole number of {d}-dim f32 rows",
            bytes.len()
        )));
    }
    let rows = bytes.len() / (4 * d);
    if rows != ds.len() {
        return Err(DataError::RowSampleMismatch {
            rows,
            dim: d,
            samples: ds.len(),
        });
    }
    let values = bytes
        .chunks_exact(4)
        .map(|b| T::from_f32_bits(f32::from_le_bytes([b[0], b[1], b[2], b[3]])))
        .collect();
    let ids = ds.samples.iter().map(|s| s.id.clone()).collect();
    let emb = EmbeddingMatrix::new(rows, d, values, ids, manifest.metric_hint)?;
    Ok((ds, emb))
}

/// Writes `manifest_path` and a sibling `<stem>.f32` payload.
pub fn save_dataset<T: Scalar>(
    manifest_path: impl AsRef<Path>,
    ds: &Dataset,
    emb: &EmbeddingMatrix<T>,
) -> Result<(), DataError> {
    let manifest_path = manifest_path.as_ref();
    ds.validate()?;
    if emb.n() != ds.len() {
        return Err(DataError::RowSampleMismatch {
            rows: emb.n(),
            dim: emb.d(),
            samples: ds.len(),
        });
    }
    let stem = manifest_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("embeddings");
    let embedding_file = format!("{stem}.f32");
    let manifest = Manifest {
        name: ds.name.clone(),
        task_kind: match ds.task_kind {
            TaskKind::Classification => "classification".into(),
            TaskKind::Regression => "regression".into(),
        },
        class_names: ds.class_names.clone(),
        samples: ds
            .samples
            .iter()
            .map(|s| ManifestSample {
                id: s.id.clone(),
                label: s.label.and_then(label_to_json),
                split: s.split,
            })
            .collect(),
        embedding_file: embedding_file.clone(),
        embedding_dim: emb.d(),
        metric_hint: emb.metric_hint(),
        metadata: ds.metadata.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| DataError::Manifest {
        path: manifest_path.to_path_buf(),
        message: e.to_string(),
    })?;
    if let Some(parent) = manifest_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(manifest_path, json).map_err(io_err(manifest_path))?;

    let mut bytes = Vec::with_capacity(emb.values().len() * 4);
    for v in emb.values() {
        bytes.extend_from_slice(&v.to_f32_lossy().to_le_bytes());
    }
    let payload = payload_path(manifest_path, &embedding_file);
    fs::write(&payload, bytes).map_err(io_err(&payload))?;
    Ok(())
}

fn payload_path(manifest_path: &Path, embedding_file: &str) -> PathBuf {
    let p = Path::new(embedding_file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_fixture(dir: &Path, rows: usize, payload: &[f32]) -> PathBuf {
        let samples: Vec<_> = (0..rows)
            .map(|i| {
                serde_json::json!({
                    "id": format!("s{i}"),
                    "label": i % 2,
                    "split": if i < 3 { "train" } else { "query" },
                })
            })
            .collect();
        let manifest = serde_json::json!({
            "name": "fixture",
            "task_kind": "classification",
            "class_names": ["a", "b"],
            "samples": samples,
            "embedding_file": "emb.f32",
            "embedding_dim": 2,
            "metric_hint": "euclidean",
        });
        let path = dir.join("fixture.json");
        fs::write(&path, manifest.to_string()).unwrap();
        let bytes: Vec<u8> = payload.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(dir.join("emb.f32"), bytes).unwrap();
        path
    }

    #[test]
    fn loads_hand_written_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_fixture(dir.path(), 4, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let (ds, emb) = load_dataset::<f64>(&path).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!((emb.n(), emb.d()), (4, 2));
        assert_eq!(emb.row(3), &[6.0, 7.0]);
        assert_eq!(emb.sample_ids()[2], "s2");
    }

    #[test]
    fn row_count_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_fixture(dir.path(), 4, &[0.0; 6]);
        let err = load_dataset::<f64>(&path).unwrap_err();
        assert!(err.to_string().starts_with("row/sample mismatch"), "{err}");
    }

    #[test]
    fn nan_payload_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let mut payload = [0.0f32; 8];
        payload[5] = f32::NAN;
        let path = write_fixture(dir.path(), 4, &payload);
        let err = load_dataset::<f32>(&path).unwrap_err();
        assert_eq!(err.to_string(), "non-finite value at row 2, col 1");
    }

    #[test]
    fn missing_manifest_and_unknown_task() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_dataset::<f64>(dir.path().join("nope.json")),
            Err(DataError::Io { .. })
        ));
        let path = write_fixture(dir.path(), 4, &[0.0; 8]);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("classification", "ranking");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            load_dataset::<f64>(&path),
            Err(DataError::UnknownTaskKind(_))
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_fixture(dir.path(), 4, &[0.0; 8]);
        let text = fs::read_to_string(&path)
            .unwrap()
            .replace("\"s1\"", "\"s0\"");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            load_dataset::<f64>(&path),
            Err(DataError::DuplicateId(_))
        ));
    }
}
