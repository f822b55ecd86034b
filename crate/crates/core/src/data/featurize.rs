//! Minimal tabular featurizer: standardized numerics, one-hot categoricals.

use std::collections::BTreeSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{DataError, EmbeddingMatrix, MetricHint};
use crate::Scalar;

const MISSING_TOKENS: [&str; 7] = ["", "na", "n/a", "nan", "?", "null", "none"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl std::str::FromStr for ColumnKind {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "numeric" => Ok(ColumnKind::Numeric),
            "categorical" => Ok(ColumnKind::Categorical),
            other => Err(DataError::Csv(format!("unknown column type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
    /// `None` marks a missing cell.
    pub values: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
    pub row_ids: Vec<String>,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Removes and returns the named column.
    pub fn take_column(&mut self, name: &str) -> Option<Column> {
        let pos = self.columns.iter().position(|c| c.name == name)?;
        Some(self.columns.remove(pos))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingNumericPolicy {
    #[default]
    Median,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingCategoricalPolicy {
    /// Missing cells get their own one-hot slot.
    #[default]
    DistinctCategory,
    /// Missing cells encode as an all-zero block.
    AllZeros,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantColumnPolicy {
    #[default]
    Zeros,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabularFeaturizerConfig {
    pub missing_numeric: MissingNumericPolicy,
    pub missing_categorical: MissingCategoricalPolicy,
    pub constant_column: ConstantColumnPolicy,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    MISSING_TOKENS.iter().any(|m| t.eq_ignore_ascii_case(m))
}

/// Parses a CSV with a header row and a `#types:` line.
///
/// The `#types:` line lists one of `numeric` / `categorical` per header
/// column and may appear before or after the header. An optional `id_column`
/// supplies row ids (it must be declared `categorical`); otherwise rows are
/// numbered from zero.
pub fn read_csv_table<R: Read>(mut reader: R, id_column: Option<&str>) -> Result<Table, DataError> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| DataError::Csv(e.to_string()))?;
    let mut types_line = None;
    let mut body = String::with_capacity(text.len());
    for line in text.lines() {
        if let Some(rest) = line.trim_start().strip_prefix("#types:") {
            if types_line.replace(rest.to_string()).is_some() {
                return Err(DataError::Csv("more than one #types: line".into()));
            }
        } else if !line.trim().is_empty() {
            body.push_str(line);
            body.push('\n');
        }
    }
    let types_line = types_line.ok_or_else(|| DataError::Csv("missing #types: line".into()))?;
    let kinds = types_line
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<ColumnKind>, _>>()?;

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(body.as_bytes());
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.len() != kinds.len() {
        return Err(DataError::Csv(format!(
            "#types: declares {} columns, header has {}",
            kinds.len(),
            headers.len()
        )));
    }
    let mut columns: Vec<Column> = headers
        .iter()
        .zip(&kinds)
        .map(|(name, &kind)| Column {
            name: name.clone(),
            kind,
            values: Vec::new(),
        })
        .collect();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        if record.len() != columns.len() {
            return Err(DataError::Csv(format!(
                "row {} has {} fields, expected {}",
                r + 1,
                record.len(),
                columns.len()
            )));
        }
        for (col, cell) in columns.iter_mut().zip(record.iter()) {
            col.values
                .push((!is_missing(cell)).then(|| cell.trim().to_string()));
        }
    }
    let n_rows = columns.first().map_or(0, |c| c.values.len());
    let mut table = Table {
        columns,
        row_ids: (0..n_rows).map(|i| i.to_string()).collect(),
    };
    if let Some(id_col) = id_column {
        let col = table
            .take_column(id_col)
            .ok_or_else(|| DataError::Csv(format!("id column {id_col:?} not found")))?;
        table.row_ids = col
            .values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| DataError::Csv(format!("row {} has no id", i + 1))))
            .collect::<Result<_, _>>()?;
    }
    Ok(table)
}

enum Encoder {
    Numeric {
        fill: f64,
        mean: f64,
        std: f64,
        keep: bool,
    },
    Categorical {
        levels: Vec<String>,
        missing_slot: bool,
    },
}

impl Encoder {
    fn width(&self) -> usize {
        match self {
            Encoder::Numeric { keep, .. } => usize::from(*keep),
            Encoder::Categorical {
                levels,
                missing_slot,
            } => levels.len() + usize::from(*missing_slot),
        }
    }
}

fn parse_numeric(col: &Column) -> Result<Vec<Option<f64>>, DataError> {
    col.values
        .iter()
        .enumerate()
        .map(|(r, v)| {
            v.as_deref()
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| {
                            DataError::Csv(format!(
                                "column {:?} row {}: {s:?} is not a finite number",
                                col.name,
                                r + 1
                            ))
                        })
                })
                .transpose()
        })
        .collect()
}

fn median(sorted: &[f64]) -> f64 {
    let m = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        0.5 * (sorted[m - 1] + sorted[m])
    }
}

/// Encodes a typed table into a dense matrix.
///
/// Statistics (imputation values, mean, population std) are fitted on
/// `fit_rows` when given, otherwise on every row. Category vocabularies are
/// collected from all rows in sorted order; the missing slot, when present,
/// comes last.
pub fn featurize_tabular<T: Scalar>(
    table: &Table,
    cfg: &TabularFeaturizerConfig,
    fit_rows: Option<&[usize]>,
) -> Result<EmbeddingMatrix<T>, DataError> {
    let n = table.n_rows();
    if n == 0 || table.columns.is_empty() {
        return Err(DataError::EmptyTable);
    }
    let all_rows: Vec<usize> = (0..n).collect();
    let fit_rows = fit_rows.unwrap_or(&all_rows);
    if fit_rows.is_empty() || fit_rows.iter().any(|&r| r >= n) {
        return Err(DataError::Shape("fit rows empty or out of range".into()));
    }

    let mut parsed = Vec::with_capacity(table.columns.len());
    let mut encoders = Vec::with_capacity(table.columns.len());
    for col in &table.columns {
        if col.values.len() != n {
            return Err(DataError::Shape(format!("column {:?} is ragged", col.name)));
        }
        match col.kind {
            ColumnKind::Numeric => {
                let values = parse_numeric(col)?;
                let mut seen: Vec<f64> = fit_rows.iter().filter_map(|&r| values[r]).collect();
                if seen.is_empty() {
                    return Err(DataError::AllMissing(col.name.clone()));
                }
                seen.sort_by(f64::total_cmp);
                let fill = match cfg.missing_numeric {
                    MissingNumericPolicy::Median => median(&seen),
                    MissingNumericPolicy::Mean => seen.iter().sum::<f64>() / seen.len() as f64,
                };
                let filled: Vec<f64> = fit_rows
                    .iter()
                    .map(|&r| values[r].unwrap_or(fill))
                    .collect();
                let m = filled.len() as f64;
                let mean = filled.iter().sum::<f64>() / m;
                let var = filled.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
                let std = var.sqrt();
                let constant = !(std > 0.0);
                encoders.push(Encoder::Numeric {
                    fill,
                    mean,
                    std,
                    keep: !(constant && cfg.constant_column == ConstantColumnPolicy::Drop),
                });
                parsed.push(Some(values));
            }
            ColumnKind::Categorical => {
                let levels: BTreeSet<&str> =
                    col.values.iter().flatten().map(String::as_str).collect();
                if levels.is_empty() {
                    return Err(DataError::AllMissing(col.name.clone()));
                }
                let has_missing = col.values.iter().any(Option::is_none);
                encoders.push(Encoder::Categorical {
                    levels: levels.into_iter().map(str::to_string).collect(),
                    missing_slot: has_missing
                        && cfg.missing_categorical == MissingCategoricalPolicy::DistinctCategory,
                });
                parsed.push(None);
            }
        }
    }

    let d: usize = encoders.iter().map(Encoder::width).sum();
    if d == 0 {
        return Err(DataError::Shape("every column was dropped".into()));
    }
    let mut out = Vec::with_capacity(n * d);
    for r in 0..n {
        for ((col, enc), numeric) in table.columns.iter().zip(&encoders).zip(&parsed) {
            match enc {
                Encoder::Numeric {
                    fill,
                    mean,
                    std,
                    keep,
                } => {
                    if !keep {
                        continue;
                    }
                    let x = numeric.as_ref().and_then(|v| v[r]).unwrap_or(*fill);
                    let z = if *std > 0.0 { (x - mean) / std } else { 0.0 };
                    out.push(T::lit(z));
                }
                Encoder::Categorical {
                    levels,
                    missing_slot,
                } => {
                    let hot = match &col.values[r] {
                        Some(v) => levels.iter().position(|l| l == v),
                        None if *missing_slot => Some(levels.len()),
                        None => None,
                    };
                    let width = levels.len() + usize::from(*missing_slot);
                    out.extend(
                        (0..width).map(|k| if Some(k) == hot { T::one() } else { T::zero() }),
                    );
                }
            }
        }
    }
    EmbeddingMatrix::new(n, d, out, table.row_ids.clone(), MetricHint::Euclidean)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric(name: &str, vals: &[Option<f64>]) -> Column {
        Column {
            name: name.into(),
            kind: ColumnKind::Numeric,
            values: vals.iter().map(|v| v.map(|x| x.to_string())).collect(),
        }
    }

    fn categorical(name: &str, vals: &[Option<&str>]) -> Column {
        Column {
            name: name.into(),
            kind: ColumnKind::Categorical,
            values: vals.iter().map(|v| v.map(str::to_string)).collect(),
        }
    }

    fn table(columns: Vec<Column>) -> Table {
        let n = columns[0].values.len();
        Table {
            columns,
            row_ids: (0..n).map(|i| i.to_string()).collect(),
        }
    }

    #[test]
    fn standardizes_with_population_std() {
        let t = table(vec![numeric("x", &[Some(1.0), Some(2.0), Some(3.0)])]);
        let m = featurize_tabular::<f64>(&t, &Default::default(), None).unwrap();
        // mean 2, population std sqrt(2/3)
        let s = (2.0f64 / 3.0).sqrt();
        let expected = [-1.0 / s, 0.0, 1.0 / s];
        for (got, want) in m.values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((m.values()[2] - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn one_hot_and_constant_column() {
        let t = table(vec![
            categorical("c", &[Some("a"), Some("b"), Some("a")]),
            numeric("k", &[Some(5.0), Some(5.0), Some(5.0)]),
        ]);
        let m = featurize_tabular::<f64>(&t, &Default::default(), None).unwrap();
        assert_eq!(m.d(), 3);
        assert_eq!(m.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(m.row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(m.row(2), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_values_and_dimension_rule() {
        let t = table(vec![
            numeric("x", &[Some(1.0), None, Some(3.0), Some(10.0)]),
            categorical("c", &[Some("a"), None, Some("b"), Some("a")]),
        ]);
        let m = featurize_tabular::<f64>(&t, &Default::default(), None).unwrap();
        // 1 numeric + (2 levels + missing slot)
        assert_eq!(m.d(), 4);
        assert_eq!(&m.row(1)[1..], &[0.0, 0.0, 1.0]);
        // median of {1,3,10} = 3 imputed, equal to row 2's value
        assert_eq!(m.row(1)[0], m.row(2)[0]);
    }

    #[test]
    fn rejects_all_missing_and_empty() {
        let t = table(vec![numeric("x", &[None, None])]);
        assert!(matches!(
            featurize_tabular::<f64>(&t, &Default::default(), None),
            Err(DataError::AllMissing(_))
        ));
        let empty = Table {
            columns: vec![],
            row_ids: vec![],
        };
        assert!(matches!(
            featurize_tabular::<f64>(&empty, &Default::default(), None),
            Err(DataError::EmptyTable)
        ));
    }

    #[test]
    fn fits_statistics_on_given_rows() {
        let t = table(vec![numeric("x", &[Some(0.0), Some(2.0), Some(100.0)])]);
        let m = featurize_tabular::<f64>(&t, &Default::default(), Some(&[0, 1])).unwrap();
        assert_eq!(m.row(0), &[-1.0]);
        assert_eq!(m.row(1), &[1.0]);
        assert_eq!(m.row(2), &[99.0]);
    }

    #[test]
    fn reads_typed_csv() {
        let csv = "#types: categorical,numeric,categorical\nid,x,color\nr1,1.5,red\nr2,NA,blue\n";
        let t = read_csv_table(csv.as_bytes(), Some("id")).unwrap();
        assert_eq!(t.row_ids, vec!["r1", "r2"]);
        assert_eq!(t.columns.len(), 2);
        assert_eq!(t.columns[0].values, vec![Some("1.5".to_string()), None]);
        assert!(read_csv_table("x\n1\n".as_bytes(), None).is_err());
    }
}
