use std::collections::BTreeMap;

use super::{CountFunction, CountValue, DecompError, MonotonicDecomposition, MonotonicTerm};
use crate::poset::PatternPoset;

pub const ENUMERATION_MAX_ELEMENTS: usize = 6;
pub const ENUMERATION_MAX_TOTAL: u64 = 16;

/// Every irredundant integer-valued monotonic decomposition of `f` with at
/// most `max_terms` terms, each listed once up to term order.
///
/// Elements are visited in index order (a linear extension). At each element
/// the value `f(x)` is split between the already-open terms whose upper set
/// contains `x` (each capped by its values on the lower covers of `x`) and
/// new terms rooted at `x` (each at least 1). Open terms with identical
/// histories are interchangeable, so they receive nonincreasing values;
/// new terms are opened in nonincreasing order. This yields one canonical
/// representative per multiset of terms.
pub fn enumerate_integer_decompositions<V: CountValue>(
    f: &CountFunction<V>,
    max_terms: usize,
) -> Result<Vec<MonotonicDecomposition<V>>, DecompError> {
    let counts = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v.to_u64_exact().ok_or(DecompError::NonInteger(i)))
        .collect::<Result<Vec<u64>, _>>()?;
    let total: u64 = counts.iter().sum();
    if f.len() > ENUMERATION_MAX_ELEMENTS || total > ENUMERATION_MAX_TOTAL {
        return Err(DecompError::TooLarge {
            elements: f.len(),
            total: f.total().to_string(),
            max_elements: ENUMERATION_MAX_ELEMENTS,
            max_total: ENUMERATION_MAX_TOTAL,
        });
    }

    let mut search = Search {
        poset: f.poset(),
        counts: &counts,
        max_terms,
        open: Vec::new(),
        found: Vec::new(),
    };
    search.element(0);

    let poset = f.poset();
    Ok(search
        .found
        .into_iter()
        .map(|terms| {
            let terms = terms
                .into_iter()
                .map(|t| {
                    let g: BTreeMap<usize, V> = poset
                        .upper_set(t.root)
                        .expect("valid root")
                        .into_iter()
                        .map(|x| (x, V::from_u64(t.values[x])))
                        .collect();
                    MonotonicTerm::new(t.root, g)
                })
                .collect();
            MonotonicDecomposition::from_parts_unchecked(f.clone(), terms)
        })
        .collect())
}

#[derive(Clone)]
struct OpenTerm {
    root: usize,
    /// Values at elements visited so far; zero outside the upper set.
    values: Vec<u64>,
}

struct Search<'a> {
    poset: &'a PatternPoset,
    counts: &'a [u64],
    max_terms: usize,
    open: Vec<OpenTerm>,
    found: Vec<Vec<OpenTerm>>,
}

impl Search<'_> {
    fn element(&mut self, x: usize) {
        if x == self.counts.len() {
            self.found.push(self.open.clone());
            return;
        }
        // Open terms that contain x, with the cap monotonicity imposes.
        let active: Vec<(usize, u64)> = self
            .open
            .iter()
            .enumerate()
            .filter(|(_, t)| self.poset.leq(t.root, x))
            .map(|(k, t)| {
                let cap = self
                    .poset
                    .lower_covers(x)
                    .iter()
                    .filter(|&&z| self.poset.leq(t.root, z))
                    .map(|&z| t.values[z])
                    .min()
                    .expect("x lies strictly above the root of an open term");
                (k, cap)
            })
            .collect();
        self.assign(x, &active, 0, self.counts[x]);
    }

    fn assign(&mut self, x: usize, active: &[(usize, u64)], pos: usize, remaining: u64) {
        if pos == active.len() {
            let budget = self.max_terms.saturating_sub(self.open.len());
            self.open_new(x, remaining, remaining, budget);
            return;
        }
        let (k, cap) = active[pos];
        let mut upper = cap.min(remaining);
        if pos > 0 {
            let (prev, _) = active[pos - 1];
            if prev + 1 == k && self.same_history(prev, k, x) {
                upper = upper.min(self.open[prev].values[x]);
            }
        }
        for v in 0..=upper {
            self.open[k].values[x] = v;
            self.assign(x, active, pos + 1, remaining - v);
        }
        self.open[k].values[x] = 0;
    }

    /// Terms `a` and `b` have the same root and agree on every element before `x`.
    fn same_history(&self, a: usize, b: usize, x: usize) -> bool {
        self.open[a].root == self.open[b].root
            && self.open[a].values[..x] == self.open[b].values[..x]
    }

    /// Splits `remaining` into new terms rooted at `x`, each value in
    /// `1..=largest`, nonincreasing.
    fn open_new(&mut self, x: usize, remaining: u64, largest: u64, budget: usize) {
        if remaining == 0 {
            self.element(x + 1);
            return;
        }
        if budget == 0 {
            return;
        }
        for v in (1..=largest.min(remaining)).rev() {
            let mut values = vec![0; self.counts.len()];
            values[x] = v;
            self.open.push(OpenTerm { root: x, values });
            self.open_new(x, remaining - v, v, budget - 1);
            self.open.pop();
        }
    }
}
