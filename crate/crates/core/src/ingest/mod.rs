//! Turning file corpora into message matrices and pattern counts.

mod config;
mod formats;
mod run;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use serde_json::Value;
use thiserror::Error;

use crate::decomp::CountFunction;
use crate::poset::{MessagePattern, MessageUniverse, PatternPoset, PosetError};

pub use config::{
    HarnessConfig, MessageRule, ParserSpec, RuleKind, DEFAULT_TIMEOUT_SECS, FILE_PLACEHOLDER,
};
pub use formats::{
    load_matrix, load_pattern_counts, read_dense_csv, read_pattern_counts, read_sparse_json,
    save_matrix, write_dense_csv, write_pattern_counts, write_pattern_counts_with,
    write_sparse_json, FormatError, MatrixFormat,
};
pub use run::{run_harness, ExecutionOutcome};

/// Prefix given to a message replaced by its absence.
pub const ABSENCE_PREFIX: &str = "absence-of-";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("invalid harness config: {0}")]
    Config(String),
    #[error("parser `{parser}`: cannot resolve command `{program}`")]
    UnresolvableCommand { parser: String, program: String },
    #[error("threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("duplicate file identifier `{0}`")]
    DuplicateFile(String),
    #[error("row `{file}` has width {found}, expected {expected}")]
    RowWidth {
        file: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown message `{0}`")]
    UnknownMessage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Free-form metadata carried with a matrix (config digest, timestamp,
/// sampler seed, inversion log, execution failures).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance(BTreeMap<String, Value>);

impl Provenance {
    pub fn insert(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.0.insert(key.into(), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    pub fn entries(&self) -> &BTreeMap<String, Value> {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<BTreeMap<String, Value>> for Provenance {
    fn from(map: BTreeMap<String, Value>) -> Self {
        Self(map)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixRow {
    pub file: String,
    pub pattern: MessagePattern,
}

/// One row per file, one column per message.
#[derive(Debug, Clone, PartialEq)]
pub struct FileMessageMatrix {
    universe: MessageUniverse,
    rows: Vec<MatrixRow>,
    provenance: Provenance,
}

impl FileMessageMatrix {
    pub fn new(
        universe: MessageUniverse,
        rows: Vec<MatrixRow>,
        provenance: Provenance,
    ) -> Result<Self, IngestError> {
        let mut seen = HashSet::with_capacity(rows.len());
        for row in &rows {
            if row.pattern.width() != universe.len() {
                return Err(IngestError::RowWidth {
                    file: row.file.clone(),
                    expected: universe.len(),
                    found: row.pattern.width(),
                });
            }
            if !seen.insert(row.file.as_str()) {
                return Err(IngestError::DuplicateFile(row.file.clone()));
            }
        }
        Ok(Self {
            universe,
            rows,
            provenance,
        })
    }

    pub fn empty(universe: MessageUniverse) -> Self {
        Self {
            universe,
            rows: Vec::new(),
            provenance: Provenance::default(),
        }
    }

    pub fn universe(&self) -> &MessageUniverse {
        &self.universe
    }

    pub fn rows(&self) -> &[MatrixRow] {
        &self.rows
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn provenance_mut(&mut self) -> &mut Provenance {
        &mut self.provenance
    }

    /// Universe and rows match; provenance is ignored.
    pub fn same_data(&self, other: &FileMessageMatrix) -> bool {
        self.universe == other.universe && self.rows == other.rows
    }

    /// Number of rows in which each message occurs.
    pub fn message_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.universe.len()];
        for row in &self.rows {
            for j in row.pattern.ones() {
                counts[j] += 1;
            }
        }
        counts
    }

    /// Fraction of rows in which each message occurs (0 for an empty matrix).
    pub fn message_frequencies(&self) -> Vec<f64> {
        let n = self.rows.len();
        self.message_counts()
            .into_iter()
            .map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
            .collect()
    }
}

/// Flips the named messages in every row and renames each `m` to
/// `absence-of-m` (or back, when `m` already carries the prefix). Applying
/// it twice with the same names restores the input.
pub fn invert_messages(
    m: &FileMessageMatrix,
    names: &[String],
) -> Result<FileMessageMatrix, IngestError> {
    let mut flip = Vec::with_capacity(names.len());
    for name in names {
        let j = m
            .universe
            .index_of(name)
            .ok_or_else(|| IngestError::UnknownMessage(name.clone()))?;
        flip.push(j);
    }
    let mut new_names = m.universe.names().to_vec();
    for &j in &flip {
        let old = &m.universe.names()[j];
        new_names[j] = match old.strip_prefix(ABSENCE_PREFIX) {
            Some(base) => base.to_owned(),
            None => format!("{ABSENCE_PREFIX}{old}"),
        };
    }
    let universe = MessageUniverse::new(new_names)?;
    let rows = m
        .rows
        .iter()
        .map(|row| {
            let mut pattern = row.pattern.clone();
            for &j in &flip {
                pattern.set(j, !pattern.contains(j));
            }
            MatrixRow {
                file: row.file.clone(),
                pattern,
            }
        })
        .collect();
    Ok(FileMessageMatrix {
        universe,
        rows,
        provenance: m.provenance.clone(),
    })
}

/// Replaces every message occurring in more than `threshold` of the rows by
/// its absence. Returns the new matrix and the original names of the
/// inverted messages, which are also appended to the provenance under
/// `"inverted"`.
pub fn invert_frequent_messages(
    m: &FileMessageMatrix,
    threshold: f64,
) -> Result<(FileMessageMatrix, Vec<String>), IngestError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(IngestError::InvalidThreshold(threshold));
    }
    let n = m.rows.len() as f64;
    let frequent: Vec<String> = m
        .message_counts()
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c as f64 > threshold * n)
        .map(|(j, _)| m.universe.names()[j].clone())
        .collect();
    if frequent.is_empty() {
        return Ok((m.clone(), frequent));
    }
    let mut inverted = invert_messages(m, &frequent)?;
    let mut log: Vec<Value> = match inverted.provenance.get("inverted") {
        Some(Value::Array(prev)) => prev.clone(),
        _ => Vec::new(),
    };
    log.extend(frequent.iter().cloned().map(Value::from));
    inverted.provenance.insert("inverted", log);
    Ok((inverted, frequent))
}

/// Counts rows per distinct pattern over the poset of observed patterns.
pub fn aggregate_counts(m: &FileMessageMatrix) -> (Arc<PatternPoset>, CountFunction<u64>) {
    let mut counts: HashMap<&MessagePattern, u64> = HashMap::new();
    for row in &m.rows {
        *counts.entry(&row.pattern).or_default() += 1;
    }
    let poset = PatternPoset::build(m.universe.clone(), counts.keys().map(|p| (*p).clone()))
        .expect("rows share the matrix universe");
    let values = poset.elements().iter().map(|p| counts[p]).collect();
    let poset = Arc::new(poset);
    let f = CountFunction::new(Arc::clone(&poset), values).expect("one count per element");
    (poset, f)
}
