//! On-disk forms of matrices and pattern counts.
//!
//! * dense CSV: header `file_id,<msg1>,<msg2>,…`, one row per file, 0/1 cells;
//! * sparse JSON: `{"messages": [...], "rows": [{"file": id, "on": [...]}], "provenance": {...}}`;
//! * pattern-count JSON: `{"messages": [...], "patterns": [{"on": [...], "count": n}]}`.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::{aggregate_counts, FileMessageMatrix, MatrixRow, Provenance};
use crate::decomp::CountFunction;
use crate::poset::{MessageUniverse, PatternPoset};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("line {line}, field `{field}`: {message}")]
    Cell {
        line: u64,
        field: String,
        message: String,
    },
    #[error("unknown column(s): {}", .0.join(", "))]
    UnknownColumns(Vec<String>),
    #[error("missing column(s): {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("cannot tell the format of `{}`", .0.display())]
    UnknownFormat(PathBuf),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for FormatError {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map_or(0, |p| p.line());
        match e.into_kind() {
            csv::ErrorKind::Io(io) => FormatError::Io(io),
            other => FormatError::Csv {
                line,
                message: format!("{other:?}"),
            },
        }
    }
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    DenseCsv,
    SparseJson,
}

impl MatrixFormat {
    /// `.csv` is dense CSV, anything else sparse JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => MatrixFormat::DenseCsv,
            _ => MatrixFormat::SparseJson,
        }
    }
}

/// Reads a dense CSV matrix. When `expected` is given, every message column
/// must name a message of it (and all of its messages must be present); the
/// result then uses `expected` as its universe.
pub fn read_dense_csv<R: Read>(
    reader: R,
    expected: Option<&MessageUniverse>,
) -> Result<FileMessageMatrix, FormatError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = csv.headers()?.clone();
    let mut columns = header.iter();
    match columns.next() {
        Some("file_id") => {}
        other => {
            return Err(FormatError::Cell {
                line: 1,
                field: other.unwrap_or("").to_owned(),
                message: "first column must be `file_id`".into(),
            })
        }
    }
    let names: Vec<String> = columns.map(str::to_owned).collect();

    let (universe, column_index) = match expected {
        Some(universe) => {
            let unknown: Vec<String> = names
                .iter()
                .filter(|n| universe.index_of(n).is_none())
                .cloned()
                .collect();
            if !unknown.is_empty() {
                return Err(FormatError::UnknownColumns(unknown));
            }
            let present: HashSet<&str> = names.iter().map(String::as_str).collect();
            let missing: Vec<String> = universe
                .names()
                .iter()
                .filter(|n| !present.contains(n.as_str()))
                .cloned()
                .collect();
            if !missing.is_empty() {
                return Err(FormatError::MissingColumns(missing));
            }
            let index = names
                .iter()
                .map(|n| universe.index_of(n).unwrap())
                .collect();
            (universe.clone(), index)
        }
        None => {
            let universe = MessageUniverse::new(names.clone()).map_err(|e| FormatError::Cell {
                line: 1,
                field: "header".into(),
                message: e.to_string(),
            })?;
            (universe, (0..names.len()).collect::<Vec<usize>>())
        }
    };

    let mut rows = Vec::new();
    for record in csv.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() + 1 {
            return Err(FormatError::Csv {
                line,
                message: format!(
                    "expected {} fields, found {}",
                    names.len() + 1,
                    record.len()
                ),
            });
        }
        let mut pattern = universe.empty_pattern();
        for (k, cell) in record.iter().skip(1).enumerate() {
            match cell.trim() {
                "0" => {}
                "1" => pattern.insert(column_index[k]),
                other => {
                    return Err(FormatError::Cell {
                        line,
                        field: names[k].clone(),
                        message: format!("expected 0 or 1, found `{other}`"),
                    })
                }
            }
        }
        rows.push(MatrixRow {
            file: record[0].to_owned(),
            pattern,
        });
    }
    FileMessageMatrix::new(universe, rows, Provenance::default())
        .map_err(|e| field_error("file_id", e.to_string()))
}

pub fn write_dense_csv<W: Write>(m: &FileMessageMatrix, writer: W) -> Result<(), FormatError> {
    let mut csv = csv::Writer::from_writer(writer);
    let mut header = vec!["file_id".to_owned()];
    header.extend(m.universe().names().iter().cloned());
    csv.write_record(&header)?;
    let width = m.universe().len();
    for row in m.rows() {
        let mut record = Vec::with_capacity(width + 1);
        record.push(row.file.clone());
        record
            .extend((0..width).map(|j| if row.pattern.contains(j) { "1" } else { "0" }.to_owned()));
        csv.write_record(&record)?;
    }
    csv.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseMatrixJson {
    messages: Vec<String>,
    rows: Vec<SparseRowJson>,
    #[serde(default)]
    provenance: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SparseRowJson {
    file: String,
    on: Vec<String>,
}

pub fn read_sparse_json(text: &str) -> Result<FileMessageMatrix, FormatError> {
    let raw: SparseMatrixJson = serde_json::from_str(text)?;
    let universe =
        MessageUniverse::new(raw.messages).map_err(|e| field_error("messages", e.to_string()))?;
    let mut rows = Vec::with_capacity(raw.rows.len());
    for (i, row) in raw.rows.into_iter().enumerate() {
        let pattern = universe
            .pattern_of(&row.on)
            .map_err(|e| field_error(format!("rows[{i}].on"), e.to_string()))?;
        rows.push(MatrixRow {
            file: row.file,
            pattern,
        });
    }
    FileMessageMatrix::new(universe, rows, raw.provenance.into())
        .map_err(|e| field_error("rows", e.to_string()))
}

pub fn write_sparse_json(m: &FileMessageMatrix) -> String {
    let raw = SparseMatrixJson {
        messages: m.universe().names().to_vec(),
        rows: m
            .rows()
            .iter()
            .map(|r| SparseRowJson {
                file: r.file.clone(),
                on: m.universe().names_of(&r.pattern),
            })
            .collect(),
        provenance: m.provenance().entries().clone(),
    };
    let mut text = serde_json::to_string_pretty(&raw).expect("serializable");
    text.push('\n');
    text
}

pub fn save_matrix(m: &FileMessageMatrix, path: &Path) -> Result<(), FormatError> {
    match MatrixFormat::from_path(path) {
        MatrixFormat::DenseCsv => write_dense_csv(m, std::fs::File::create(path)?),
        MatrixFormat::SparseJson => Ok(std::fs::write(path, write_sparse_json(m))?),
    }
}

pub fn load_matrix(path: &Path) -> Result<FileMessageMatrix, FormatError> {
    match MatrixFormat::from_path(path) {
        MatrixFormat::DenseCsv => read_dense_csv(std::fs::File::open(path)?, None),
        MatrixFormat::SparseJson => read_sparse_json(&std::fs::read_to_string(path)?),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternCountsJson {
    messages: Vec<String>,
    patterns: Vec<PatternCountJson>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    provenance: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternCountJson {
    on: Vec<String>,
    count: u64,
}

pub fn read_pattern_counts(
    text: &str,
) -> Result<(Arc<PatternPoset>, CountFunction<u64>), FormatError> {
    let raw: PatternCountsJson = serde_json::from_str(text)?;
    let universe =
        MessageUniverse::new(raw.messages).map_err(|e| field_error("messages", e.to_string()))?;
    let mut entries = Vec::with_capacity(raw.patterns.len());
    let mut seen = HashSet::new();
    for (i, entry) in raw.patterns.into_iter().enumerate() {
        let pattern = universe
            .pattern_of(&entry.on)
            .map_err(|e| field_error(format!("patterns[{i}].on"), e.to_string()))?;
        if !seen.insert(pattern.clone()) {
            return Err(field_error(format!("patterns[{i}]"), "duplicate pattern"));
        }
        entries.push((pattern, entry.count));
    }
    entries.sort();
    let values = entries.iter().map(|(_, c)| *c).collect();
    let poset = PatternPoset::build(universe, entries.into_iter().map(|(p, _)| p))
        .map_err(|e| field_error("patterns", e.to_string()))?;
    let poset = Arc::new(poset);
    let f = CountFunction::new(Arc::clone(&poset), values).expect("one count per pattern");
    Ok((poset, f))
}

/// Pattern counts in canonical pattern order.
pub fn write_pattern_counts(f: &CountFunction<u64>) -> String {
    write_pattern_counts_with(f, Provenance::default())
}

pub fn write_pattern_counts_with(f: &CountFunction<u64>, provenance: Provenance) -> String {
    let universe = f.poset().universe();
    let raw = PatternCountsJson {
        messages: universe.names().to_vec(),
        patterns: f
            .poset()
            .elements()
            .iter()
            .zip(f.values())
            .map(|(p, &count)| PatternCountJson {
                on: universe.names_of(p),
                count,
            })
            .collect(),
        provenance: provenance.entries().clone(),
    };
    let mut text = serde_json::to_string_pretty(&raw).expect("serializable");
    text.push('\n');
    text
}

/// Loads counts from any supported input: pattern-count JSON, or a matrix
/// (dense CSV or sparse JSON) which is aggregated.
pub fn load_pattern_counts(
    path: &Path,
) -> Result<(Arc<PatternPoset>, CountFunction<u64>), FormatError> {
    if MatrixFormat::from_path(path) == MatrixFormat::DenseCsv {
        return Ok(aggregate_counts(&load_matrix(path)?));
    }
    let text = std::fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)?;
    if value.get("patterns").is_some() {
        read_pattern_counts(&text)
    } else if value.get("rows").is_some() {
        Ok(aggregate_counts(&read_sparse_json(&text)?))
    } else {
        Err(FormatError::UnknownFormat(path.to_owned()))
    }
}
