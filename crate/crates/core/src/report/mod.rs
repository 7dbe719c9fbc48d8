//! Tables and graphs built from counts and decompositions.

mod oracle;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::decomp::{dialect_count_lower_bound, CountFunction, MonotonicDecomposition};
use crate::poset::{MessagePattern, MessageUniverse};

pub use oracle::{minimal_indices, oracle_verdict, support_label, OracleVerdict};

/// Default `--min-count`.
pub const DEFAULT_MIN_COUNT: u64 = 5;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("annotations: {0}")]
    Annotations(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortOrder {
    /// Order in which the greedy decomposition extracted the terms.
    Discovery,
    /// Descending root count, ties by discovery.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

/// User-supplied interpretations keyed by the comma-joined required message
/// names (in universe order; `""` for the empty set).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Annotations(BTreeMap<String, String>);

impl Annotations {
    pub fn from_json_str(text: &str) -> Result<Self, ReportError> {
        let map: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| ReportError::Annotations(e.to_string()))?;
        Ok(Self(map))
    }

    pub fn key(names: &[String]) -> String {
        names.join(",")
    }

    pub fn get(&self, names: &[String]) -> Option<&str> {
        self.0.get(&Self::key(names)).map(String::as_str)
    }

    /// Keys matching none of the given required sets.
    pub fn unused<'a>(&'a self, used: &[DialectReport]) -> Vec<&'a str> {
        self.0
            .keys()
            .filter(|k| !used.iter().any(|d| &Annotations::key(&d.required) == *k))
            .map(String::as_str)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DialectReport {
    /// 1-based discovery order.
    pub rank: usize,
    pub required: Vec<String>,
    /// Residual `g(root)` when the term was extracted.
    pub root_count: u64,
    /// Number of observed patterns in the term's upper set.
    pub support_size: usize,
    /// Files whose pattern is exactly the required set. Differs from
    /// `root_count` when an earlier term already covered the root.
    pub pattern_count: u64,
    pub annotation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecomposeSummary {
    pub patterns_at_threshold: usize,
    pub dialects_at_threshold: usize,
    pub lower_bound: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecomposeReport {
    pub dialects: Vec<DialectReport>,
    pub summary: DecomposeSummary,
    #[serde(skip)]
    pub min_count: u64,
}

/// One report per term, in discovery order.
pub fn dialect_reports(
    d: &MonotonicDecomposition<u64>,
    annotations: &Annotations,
) -> Vec<DialectReport> {
    let f = d.source();
    let poset = f.poset();
    d.terms()
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let required = poset.universe().names_of(poset.element(t.root()));
            DialectReport {
                rank: k + 1,
                annotation: annotations.get(&required).map(str::to_owned),
                required,
                root_count: *t.root_count(),
                support_size: t.g().len(),
                pattern_count: *f.value(t.root()),
            }
        })
        .collect()
}

/// Keeps dialects with `root_count >= min_count`, sorted as requested, and
/// compares their number with the number of patterns at the same threshold.
pub fn decompose_report(
    d: &MonotonicDecomposition<u64>,
    min_count: u64,
    sort: SortOrder,
    annotations: &Annotations,
) -> DecomposeReport {
    let mut dialects: Vec<DialectReport> = dialect_reports(d, annotations)
        .into_iter()
        .filter(|r| r.root_count >= min_count)
        .collect();
    if sort == SortOrder::Count {
        dialects.sort_by(|a, b| b.root_count.cmp(&a.root_count).then(a.rank.cmp(&b.rank)));
    }
    let patterns_at_threshold = d
        .source()
        .values()
        .iter()
        .filter(|&&c| c >= min_count)
        .count();
    DecomposeReport {
        summary: DecomposeSummary {
            patterns_at_threshold,
            dialects_at_threshold: dialects.len(),
            lower_bound: dialect_count_lower_bound(d),
        },
        dialects,
        min_count,
    }
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn display_set(names: &[String]) -> String {
    if names.is_empty() {
        "(none)".to_owned()
    } else {
        names.join(", ")
    }
}

impl DecomposeReport {
    pub fn to_json(&self) -> String {
        pretty_json(self)
    }

    pub fn summary_line(&self) -> String {
        format!(
            "dialects with root count >= {t}: {d}; patterns with count >= {t}: {p}; lower bound on dialect count: {b}",
            t = self.min_count,
            d = self.summary.dialects_at_threshold,
            p = self.summary.patterns_at_threshold,
            b = self.summary.lower_bound,
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let any_annotation = self.dialects.iter().any(|d| d.annotation.is_some());
        let _ = write!(
            out,
            "{:>4}  {:>10}  {:>13}  {:>7}  required",
            "rank", "root_count", "pattern_count", "support"
        );
        if any_annotation {
            out.push_str("  |  annotation");
        }
        out.push('\n');
        for d in &self.dialects {
            let flag = if d.pattern_count != d.root_count {
                "*"
            } else {
                " "
            };
            let _ = write!(
                out,
                "{:>4}  {:>10}  {:>12}{}  {:>7}  {}",
                d.rank,
                d.root_count,
                d.pattern_count,
                flag,
                d.support_size,
                display_set(&d.required)
            );
            if let Some(a) = &d.annotation {
                let _ = write!(out, "  |  {a}");
            }
            out.push('\n');
        }
        if self
            .dialects
            .iter()
            .any(|d| d.pattern_count != d.root_count)
        {
            out.push_str(
                "* pattern count differs from root count (root shared with an earlier dialect)\n",
            );
        }
        out.push_str(&self.summary_line());
        out.push('\n');
        out
    }

    /// Dialect rows only; required names are joined with `;`.
    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "rank",
            "required",
            "root_count",
            "pattern_count",
            "support_size",
            "annotation",
        ])?;
        for d in &self.dialects {
            w.write_record([
                d.rank.to_string(),
                d.required.join(";"),
                d.root_count.to_string(),
                d.pattern_count.to_string(),
                d.support_size.to_string(),
                d.annotation.clone().unwrap_or_default(),
            ])?;
        }
        Ok(String::from_utf8(
            w.into_inner()
                .map_err(|e| csv::Error::from(e.into_error()))?,
        )
        .expect("utf-8"))
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, ReportError> {
        Ok(match format {
            OutputFormat::Text => self.to_text(),
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternRow {
    pub on: Vec<String>,
    pub count: u64,
}

/// Observed patterns with `count >= min_count`, descending by count; ties
/// keep canonical pattern order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternTable {
    pub messages: Vec<String>,
    pub patterns: Vec<PatternRow>,
}

pub fn pattern_table(f: &CountFunction<u64>, min_count: u64) -> PatternTable {
    let poset = f.poset();
    let mut order: Vec<usize> = (0..f.len()).filter(|&i| *f.value(i) >= min_count).collect();
    order.sort_by(|&a, &b| f.value(b).cmp(f.value(a)).then(a.cmp(&b)));
    PatternTable {
        messages: poset.universe().names().to_vec(),
        patterns: order
            .into_iter()
            .map(|i| PatternRow {
                on: poset.universe().names_of(poset.element(i)),
                count: *f.value(i),
            })
            .collect(),
    }
}

impl PatternTable {
    /// Same layout as pattern-count JSON, so it can be fed to `decompose`.
    pub fn to_json(&self) -> String {
        pretty_json(self)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:>8}  pattern\n", "count");
        for row in &self.patterns {
            let _ = writeln!(out, "{:>8}  {}", row.count, display_set(&row.on));
        }
        out
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["count", "pattern"])?;
        for row in &self.patterns {
            w.write_record([row.count.to_string(), row.on.join(";")])?;
        }
        Ok(String::from_utf8(
            w.into_inner()
                .map_err(|e| csv::Error::from(e.into_error()))?,
        )
        .expect("utf-8"))
    }

    pub fn render(&self, format: OutputFormat) -> Result<String, ReportError> {
        Ok(match format {
            OutputFormat::Text => self.to_text(),
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => self.to_csv()?,
        })
    }
}

/// Node width in inches per unit of `ln(1 + count)`.
pub const DOT_SIZE_SCALE: f64 = 0.5;

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn pattern_label(universe: &MessageUniverse, p: &MessagePattern) -> String {
    display_set(&universe.names_of(p))
}

/// Hasse diagram in DOT, drawn bottom-up. Node `n<i>` is poset element `i`;
/// its width and height are `DOT_SIZE_SCALE * ln(1 + count)`.
pub fn hasse_dot(f: &CountFunction<u64>) -> String {
    let poset = f.poset();
    let mut out =
        String::from("digraph hasse {\n  rankdir=BT;\n  node [shape=ellipse, fixedsize=true];\n");
    for (i, p) in poset.elements().iter().enumerate() {
        let count = *f.value(i);
        let size = DOT_SIZE_SCALE * (count as f64).ln_1p();
        let label = format!(
            "{}\\n{}",
            dot_escape(&pattern_label(poset.universe(), p)),
            count
        );
        let _ = writeln!(
            out,
            "  n{i} [label=\"{label}\", width={size:.6}, height={size:.6}];"
        );
    }
    for &(a, b) in poset.hasse_edges() {
        let _ = writeln!(out, "  n{a} -> n{b};");
    }
    out.push_str("}\n");
    out
}
