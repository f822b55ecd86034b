use std::path::{Path, PathBuf};

use embviz_core::data::{
    featurize_tabular, load_dataset, read_csv_table, save_dataset, split_dataset, Dataset,
    DatasetMetadata, Label, SampleRecord, Split, TaskKind,
};
use embviz_eval::{artifact_stem, render_queries, run_evaluation, Backend};
use embviz_vlm::VlmClient;
use serde_json::json;

use crate::config::RunConfig;
use crate::CliError;

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

/// CSV to manifest plus `f32` payload. Feature statistics are fitted on the
/// train split only.
pub fn featurize(csv: &Path, out: Option<&Path>, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let fc = &cfg.featurize;
    let label_col = fc.label_column.as_deref().ok_or_else(|| {
        invalid("no label column given (use --label-column or featurize.label_column)")
    })?;
    let file = std::fs::File::open(csv)
        .map_err(|e| invalid(format!("cannot read {}: {e}", csv.display())))?;
    let mut table = read_csv_table(file, fc.id_column.as_deref()).map_err(invalid)?;
    let labels = table
        .take_column(label_col)
        .ok_or_else(|| invalid(format!("label column {label_col:?} not found")))?;

    let mut class_names: Vec<String> = Vec::new();
    if fc.task == TaskKind::Classification {
        class_names = labels
            .values
            .iter()
            .flatten()
            .map(|v| v.trim().to_string())
            .collect();
        class_names.sort();
        class_names.dedup();
    }
    let samples = table
        .row_ids
        .iter()
        .zip(&labels.values)
        .map(|(id, v)| {
            let label = match (v.as_deref().map(str::trim), fc.task) {
                (None, _) => None,
                (Some(v), TaskKind::Classification) => Some(Label::Class(
                    class_names
                        .iter()
                        .position(|c| c == v)
                        .expect("collected above"),
                )),
                (Some(v), TaskKind::Regression) => Some(Label::Value(
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| {
                            invalid(format!("row {id}: target {v:?} is not a number"))
                        })?,
                )),
            };
            Ok(SampleRecord {
                id: id.clone(),
                label,
                split: Split::Train,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let name = csv
        .file_stem()
        .map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
    let ds = Dataset::new(
        name,
        fc.task,
        samples,
        class_names,
        DatasetMetadata::default(),
    )
    .map_err(invalid)?;
    let ds = split_dataset(&ds, fc.query_fraction, fc.seed).map_err(invalid)?;
    let train = ds.indices_in(Split::Train);
    let emb = featurize_tabular::<f32>(&table, &fc.featurizer, Some(&train)).map_err(invalid)?;

    let manifest = out.map_or_else(|| cfg.out.join("manifest.json"), Path::to_path_buf);
    if let Some(dir) = manifest.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    save_dataset(&manifest, &ds, &emb).map_err(|e| CliError::Io(e.to_string()))?;
    eprintln!(
        "wrote {} ({} samples, {} train, dim {})",
        manifest.display(),
        ds.len(),
        train.len(),
        emb.d()
    );
    Ok(manifest)
}

/// Writes `layout.json` and one PNG plus legend sidecar per query under `out`.
pub fn visualize(cfg: &RunConfig) -> Result<(), CliError> {
    let dataset = cfg.validate_for_run()?;
    let (ds, emb) = load_dataset::<f64>(dataset).map_err(invalid)?;
    let viz = render_queries(&ds, &emb, &cfg.pipeline).map_err(invalid)?;
    let layout = json!({
        "dataset": ds.name,
        "perplexity": viz.perplexity,
        "k": viz.k,
        "sample_ids": viz.layout_ids,
        "layout": viz.shared_layout,
    });
    write(
        &cfg.out.join("layout.json"),
        serde_json::to_vec_pretty(&layout).expect("serializable"),
    )?;
    for (j, q) in viz.plots.iter().enumerate() {
        let stem = artifact_stem(j, &q.query_id);
        write(
            &cfg.out.join("plots").join(format!("{stem}.png")),
            &q.plot.png,
        )?;
        let sidecar = serde_json::to_vec_pretty(&q.plot.sidecar).expect("serializable");
        write(
            &cfg.out.join("plots").join(format!("{stem}.sidecar.json")),
            sidecar,
        )?;
    }
    eprintln!(
        "wrote {} plots to {}",
        viz.plots.len(),
        cfg.out.join("plots").display()
    );
    Ok(())
}

/// Runs the evaluation and writes `report.json`, `report.txt` and the
/// resolved `run_config.json`. Returns whether the report is complete.
pub fn evaluate(cfg: &RunConfig) -> Result<bool, CliError> {
    let dataset = cfg.validate_for_run()?;
    let (ds, emb) = load_dataset::<f64>(dataset).map_err(invalid)?;
    let backend = if cfg.mock {
        Backend::Mock
    } else {
        Backend::Endpoint(VlmClient::new(cfg.endpoint.clone()).map_err(invalid)?)
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    let report = rt
        .block_on(run_evaluation(&ds, &emb, &cfg.pipeline, &backend))
        .map_err(|e| match e {
            embviz_eval::EvalError::Io { .. } => CliError::Io(e.to_string()),
            other => invalid(other),
        })?;
    write(
        &cfg.out.join("run_config.json"),
        serde_json::to_vec_pretty(cfg).expect("serializable"),
    )?;
    write(&cfg.out.join("report.json"), report.to_json())?;
    let table = report.to_table();
    write(&cfg.out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(!report.incomplete)
}
