use std::fmt::Write as _;

use serde::Serialize;

use crate::decomp::{
    decompose, dialect_count_lower_bound, enumerate_integer_decompositions, refines, CountFunction,
    DecompError, MonotonicDecomposition,
};

/// Exhaustive check of the greedy output against every irredundant
/// integer decomposition with at most `max_terms` terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleVerdict {
    pub max_terms: usize,
    pub enumerated: usize,
    pub greedy_terms: usize,
    /// The greedy output refines no enumerated decomposition but itself.
    pub greedy_minimal: bool,
    /// Enumerated decompositions that refine no other enumerated one.
    pub minimal_decompositions: usize,
    /// Root supports (sorted) when every minimal decomposition has the same
    /// root multiset.
    pub shared_supports: Option<Vec<Vec<String>>>,
    /// Every distinct root multiset among the minimal decompositions.
    pub root_multisets: Vec<Vec<Vec<String>>>,
    pub min_terms: usize,
    pub lower_bound: usize,
}

/// Indices of the decompositions in `all` that refine no other member.
/// `all` must hold distinct decompositions up to reorder.
pub fn minimal_indices(all: &[MonotonicDecomposition<u64>]) -> Vec<usize> {
    (0..all.len())
        .filter(|&i| {
            all.iter()
                .enumerate()
                .all(|(j, e)| j == i || !refines(&all[i], e).expect("same source"))
        })
        .collect()
}

fn sorted_roots(d: &MonotonicDecomposition<u64>) -> Vec<usize> {
    let mut roots = d.roots();
    roots.sort_unstable();
    roots
}

/// `max_terms` defaults to `Σf`, which admits every irredundant integer
/// decomposition.
pub fn oracle_verdict(
    f: &CountFunction<u64>,
    max_terms: Option<usize>,
) -> Result<OracleVerdict, DecompError> {
    let max_terms = max_terms.unwrap_or(f.total() as usize);
    let all = enumerate_integer_decompositions(f, max_terms)?;
    let greedy = decompose(f);
    let greedy_minimal = all
        .iter()
        .all(|e| e.same_up_to_reorder(&greedy) || !refines(&greedy, e).expect("same source"));
    let minimal = minimal_indices(&all);

    let mut multisets: Vec<Vec<usize>> = minimal.iter().map(|&i| sorted_roots(&all[i])).collect();
    multisets.sort();
    multisets.dedup();
    let poset = f.poset();
    let root_multisets: Vec<Vec<Vec<String>>> = multisets
        .iter()
        .map(|roots| {
            roots
                .iter()
                .map(|&r| poset.universe().names_of(poset.element(r)))
                .collect()
        })
        .collect();
    let shared_supports = match root_multisets.as_slice() {
        [only] => Some(only.clone()),
        _ => None,
    };
    Ok(OracleVerdict {
        max_terms,
        enumerated: all.len(),
        greedy_terms: greedy.len(),
        greedy_minimal,
        minimal_decompositions: minimal.len(),
        shared_supports,
        root_multisets,
        min_terms: minimal.iter().map(|&i| all[i].len()).min().unwrap_or(0),
        lower_bound: dialect_count_lower_bound(&greedy),
    })
}

/// `U_b` for a single message, `U_{a,b}` for several, `U_∅` for none.
pub fn support_label(names: &[String]) -> String {
    match names {
        [] => "U_∅".to_owned(),
        [one] => format!("U_{one}"),
        _ => format!("U_{{{}}}", names.join(",")),
    }
}

impl OracleVerdict {
    pub fn to_text(&self) -> String {
        let braces = |supports: &Vec<Vec<String>>| {
            let labels: Vec<String> = supports.iter().map(|s| support_label(s)).collect();
            format!("{{{}}}", labels.join(", "))
        };
        let shared = match &self.shared_supports {
            Some(supports) => braces(supports),
            None => {
                let all: Vec<String> = self.root_multisets.iter().map(braces).collect();
                format!("no ({})", all.join(" vs "))
            }
        };
        let mut out = format!(
            "minimal: {}; shared supports: {shared}; lower bound: {}\n",
            if self.greedy_minimal { "yes" } else { "no" },
            self.lower_bound
        );
        let _ = writeln!(
            out,
            "greedy terms: {}; enumerated decompositions (<= {} terms): {}; minimal: {}; fewest terms among minimal: {}",
            self.greedy_terms, self.max_terms, self.enumerated, self.minimal_decompositions, self.min_terms
        );
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("serializable");
        text.push('\n');
        text
    }
}
