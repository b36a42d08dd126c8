//! PROMISE-style defect datasets: loading, cleaning, log scaling and
//! summary statistics.
//!
//! A defect CSV has a header row, a block of identifier columns (class
//! name, version, ...), numeric metric columns and a defect-count column
//! (`bug` by default). Labels are binarized on load: any positive defect
//! count marks the module as defective.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default name of the defect-count column.
pub const DEFAULT_BUG_COLUMN: &str = "bug";

/// Header names that are treated as identifiers even when their cells
/// happen to parse as numbers (e.g. `version` = `1.7`).
const IDENTIFIER_HEADERS: &[&str] = &["name", "version", "project", "file", "class", "module", "path"];

/// Cell spellings read as a missing value rather than a parse error.
const MISSING_MARKERS: &[&str] = &["", "?", "na", "nan", "null"];

/// Where a dataset came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub path: Option<String>,
    pub bug_column: String,
    /// Identifier columns skipped during loading, in header order.
    pub skipped_columns: Vec<String>,
}

/// Labeled tabular defect data. Label 1 is defective, 0 is clean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectDataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub provenance: Provenance,
}

/// Table-style statistics for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub name: String,
    pub n_metrics: usize,
    pub n_instances: usize,
    pub n_defective: usize,
    pub defective_rate: f64,
}

impl DefectDataset {
    /// Builds a dataset, checking shape and label invariants.
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let name = name.into();
        if rows.is_empty() {
            return Err(Error::EmptyInput(format!("dataset `{name}` has no rows")));
        }
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                what: "label count",
                expected: rows.len(),
                got: labels.len(),
            });
        }
        let k = feature_names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                what: "row width",
                expected: k,
                got: bad.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Format(format!("label {l} is not binary")));
        }
        Ok(Self {
            name,
            feature_names,
            rows,
            labels,
            provenance: Provenance::default(),
        })
    }

    /// Builds a dataset with generated feature names `f0..f{k-1}`.
    pub fn from_rows(name: impl Into<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        let names = (0..k).map(|j| format!("f{j}")).collect();
        Self::new(name, names, rows, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_defective(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Values of feature `j` across all rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Rows carrying the given label, in dataset order, with their indices.
    pub fn rows_with_label(&self, label: u8) -> (Vec<usize>, Vec<Vec<f64>>) {
        self.rows
            .iter()
            .zip(&self.labels)
            .enumerate()
            .filter(|(_, (_, &l))| l == label)
            .map(|(i, (r, _))| (i, r.clone()))
            .unzip()
    }

    /// Selects a subset of rows by index, keeping the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Appends rows that all carry `label`.
    pub fn with_extra_rows(&self, extra: &[Vec<f64>], label: u8) -> Result<Self> {
        if let Some(bad) = extra.iter().find(|r| r.len() != self.n_features()) {
            return Err(Error::DimensionMismatch {
                what: "synthetic row width",
                expected: self.n_features(),
                got: bad.len(),
            });
        }
        let mut out = self.clone();
        out.rows.extend(extra.iter().cloned());
        out.labels.extend(std::iter::repeat_n(label, extra.len()));
        Ok(out)
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim().to_ascii_lowercase();
    MISSING_MARKERS.contains(&c.as_str())
}

fn parse_cell(cell: &str) -> Option<f64> {
    if is_missing(cell) {
        return Some(f64::NAN);
    }
    cell.trim().parse::<f64>().ok()
}

/// Loads a defect CSV from disk. The dataset name is the file stem.
pub fn load_promise_csv(path: impl AsRef<Path>, bug_column: &str) -> Result<DefectDataset> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let mut ds = parse_promise_csv(&name, text.as_bytes(), bug_column)?;
    ds.provenance.path = Some(path.display().to_string());
    Ok(ds)
}

/// Parses defect CSV content from any reader.
pub fn parse_promise_csv<R: Read>(name: &str, reader: R, bug_column: &str) -> Result<DefectDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let bug_idx = headers
        .iter()
        .position(|h| h.eq_ignore_ascii_case(bug_column))
        .ok_or_else(|| Error::Format(format!("no defect column named `{bug_column}`")))?;

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    if records.is_empty() {
        return Err(Error::EmptyInput(format!("`{name}` has a header but no data rows")));
    }

    // Leading identifier block: columns before the first metric column.
    let first = &records[0];
    let mut skipped = Vec::new();
    let mut metric_start = headers.len();
    for (j, h) in headers.iter().enumerate() {
        if j == bug_idx {
            continue;
        }
        let known_id = IDENTIFIER_HEADERS.contains(&h.to_ascii_lowercase().as_str())
            || h.is_empty()
            || h.to_ascii_lowercase().starts_with("name.");
        let numeric = first.get(j).and_then(parse_cell).is_some();
        if known_id || !numeric {
            skipped.push(j);
        } else {
            metric_start = j;
            break;
        }
    }
    let metric_cols: Vec<usize> = (metric_start..headers.len()).filter(|&j| j != bug_idx).collect();
    if metric_cols.is_empty() {
        return Err(Error::Format(format!("`{name}` has no numeric metric column")));
    }

    let mut rows = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for (r, rec) in records.iter().enumerate() {
        let cell = |j: usize| rec.get(j).unwrap_or("");
        let mut row = Vec::with_capacity(metric_cols.len());
        for &j in &metric_cols {
            let v = parse_cell(cell(j)).ok_or_else(|| Error::Parse {
                row: r + 1,
                column: headers[j].clone(),
                value: cell(j).to_string(),
            })?;
            row.push(v);
        }
        let bugs: f64 = cell(bug_idx).parse().map_err(|_| Error::Parse {
            row: r + 1,
            column: headers[bug_idx].clone(),
            value: cell(bug_idx).to_string(),
        })?;
        rows.push(row);
        labels.push(u8::from(bugs > 0.0));
    }

    let names = metric_cols.iter().map(|&j| headers[j].clone()).collect();
    let mut ds = DefectDataset::new(name, names, rows, labels)?;
    ds.provenance = Provenance {
        path: None,
        bug_column: headers[bug_idx].clone(),
        skipped_columns: skipped.iter().map(|&j| headers[j].clone()).collect(),
    };
    Ok(ds)
}

/// Drops rows with missing or non-finite cells, then exact duplicates
/// (same features and label), keeping first occurrences in order.
pub fn clean(ds: &DefectDataset) -> Result<DefectDataset> {
    let mut seen: HashSet<(Vec<u64>, u8)> = HashSet::new();
    let mut keep = Vec::with_capacity(ds.n_rows());
    for (i, (row, &label)) in ds.rows.iter().zip(&ds.labels).enumerate() {
        if !row.iter().all(|v| v.is_finite()) {
            continue;
        }
        // +0.0 folds -0.0 onto 0.0 so the two compare equal.
        let key: Vec<u64> = row.iter().map(|v| (v + 0.0).to_bits()).collect();
        if seen.insert((key, label)) {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(Error::EmptyAfterClean);
    }
    Ok(ds.subset(&keep))
}

/// Replaces every cell `v` with `ln(v + 1)`.
pub fn log_transform(ds: &DefectDataset) -> Result<DefectDataset> {
    let mut out = ds.clone();
    for (i, row) in out.rows.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if *v < 0.0 {
                return Err(Error::Domain(format!(
                    "negative value {} in row {i}, feature `{}`",
                    v, ds.feature_names[j]
                )));
            }
            *v = v.ln_1p();
        }
    }
    Ok(out)
}

pub fn summarize(ds: &DefectDataset) -> DatasetStats {
    let n = ds.n_rows();
    let d = ds.n_defective();
    DatasetStats {
        name: ds.name.clone(),
        n_metrics: ds.n_features(),
        n_instances: n,
        n_defective: d,
        defective_rate: if n == 0 { 0.0 } else { d as f64 / n as f64 },
    }
}

/// Loads a dataset and applies the standard preprocessing (clean, then log).
pub fn load_prepared(path: impl AsRef<Path>, bug_column: &str) -> Result<DefectDataset> {
    let raw = load_promise_csv(path, bug_column)?;
    log_transform(&clean(&raw)?)
}
