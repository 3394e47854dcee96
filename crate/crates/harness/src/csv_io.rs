//! CSV ingestion and emission.
//!
//! Dialect: comma-separated, `.` decimal point, optional single header row,
//! UTF-8. One optional column may hold categorical labels; every other cell
//! must parse as a finite number. Parse errors carry 1-based line and column
//! numbers. Blank lines are skipped.

use std::fs;
use std::path::Path;

use shark_core::{DataMatrix, Labeling};

use crate::error::{HarnessError, Result};

/// How to read a dataset file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CsvOptions {
    /// Skip the first non-blank line.
    pub has_header: bool,
    /// 0-based index of a categorical label column; its values are
    /// factorized to `0..k-1` in first-appearance order.
    pub label_column: Option<usize>,
}

/// Loads a dataset: the numeric feature matrix plus the factorized labels
/// when a label column is configured.
pub fn load_csv(path: &Path, opts: &CsvOptions) -> Result<(DataMatrix, Option<Labeling>)> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, path, opts)
}

/// Parses CSV text. `path` is only used in error messages.
pub fn parse_csv(
    text: &str,
    path: &Path,
    opts: &CsvOptions,
) -> Result<(DataMatrix, Option<Labeling>)> {
    let mut values: Vec<f64> = Vec::new();
    let mut label_names: Vec<String> = Vec::new();
    let mut raw_labels: Vec<usize> = Vec::new();
    let mut n_columns: Option<usize> = None;
    let mut n_rows = 0usize;
    let mut header_pending = opts.has_header;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let expected = *n_columns.get_or_insert(cells.len());
        if cells.len() != expected {
            return Err(HarnessError::RaggedRow {
                path: path.to_path_buf(),
                line: line_no,
                expected,
                found: cells.len(),
            });
        }
        if let Some(label) = opts.label_column {
            if label >= expected {
                return Err(HarnessError::LabelColumnOutOfRange {
                    index: label,
                    columns: expected,
                });
            }
        }
        for (col, cell) in cells.iter().enumerate() {
            if opts.label_column == Some(col) {
                let id = match label_names.iter().position(|n| n == cell) {
                    Some(id) => id,
                    None => {
                        label_names.push((*cell).to_string());
                        label_names.len() - 1
                    }
                };
                raw_labels.push(id);
            } else {
                let parsed: Option<f64> = cell.parse().ok().filter(|v: &f64| v.is_finite());
                match parsed {
                    Some(v) => values.push(v),
                    None => {
                        return Err(HarnessError::NonNumericCell {
                            path: path.to_path_buf(),
                            line: line_no,
                            column: col + 1,
                            value: (*cell).to_string(),
                        })
                    }
                }
            }
        }
        n_rows += 1;
    }

    let Some(columns) = n_columns else {
        return Err(HarnessError::EmptyCsv {
            path: path.to_path_buf(),
        });
    };
    let feature_columns = columns - usize::from(opts.label_column.is_some());
    let x = DataMatrix::from_vec(n_rows, feature_columns, values)?;
    let labels = if opts.label_column.is_some() {
        Some(Labeling::new(raw_labels, label_names.len())?)
    } else {
        None
    };
    Ok((x, labels))
}

/// Writes a dataset as CSV with a `f1..fm` header, appending a `label`
/// column when labels are given. Numbers use the shortest representation
/// that parses back to the identical float.
pub fn write_dataset_csv(path: &Path, x: &DataMatrix, labels: Option<&Labeling>) -> Result<()> {
    let mut out = String::new();
    for v in 0..x.n_cols() {
        if v > 0 {
            out.push(',');
        }
        out.push_str(&format!("f{}", v + 1));
    }
    if labels.is_some() {
        out.push_str(",label");
    }
    out.push('\n');
    for i in 0..x.n_rows() {
        for (v, value) in x.row(i).iter().enumerate() {
            if v > 0 {
                out.push(',');
            }
            out.push_str(&value.to_string());
        }
        if let Some(l) = labels {
            out.push_str(&format!(",{}", l.get(i)));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}
