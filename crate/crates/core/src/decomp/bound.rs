use std::collections::BTreeMap;

use super::{CountFunction, CountValue, DecompError};
use crate::poset::PatternPoset;

/// Elements `y` for which some `x < y` has `f(x) < f(y)`.
pub fn count_violations<V: CountValue>(f: &CountFunction<V>) -> Vec<usize> {
    violations_of(f.poset(), f.values())
}

pub(crate) fn violations_of<V: CountValue>(poset: &PatternPoset, values: &[V]) -> Vec<usize> {
    // below_min[y] = min{ values[x] : x < y }, propagated along lower covers.
    let n = poset.len();
    let mut below_min: Vec<Option<V>> = vec![None; n];
    let mut violations = Vec::new();
    for y in 0..n {
        let mut m: Option<V> = None;
        for &x in poset.lower_covers(y) {
            let candidate = match &below_min[x] {
                Some(b) if *b < values[x] => b,
                _ => &values[x],
            };
            if m.as_ref().map_or(true, |cur| candidate < cur) {
                m = Some(candidate.clone());
            }
        }
        if let Some(ref lowest) = m {
            if *lowest < values[y] {
                violations.push(y);
            }
        }
        below_min[y] = m;
    }
    violations
}

/// The unique maximal monotonic decreasing `g ≤ f` on an upward-closed
/// `domain`.
///
/// Minimal elements of the domain take `g = f`; every other element takes
/// `min({f(m)} ∪ {g(x) : x < m})`. Element indices are a linear extension of
/// the order, so one ascending pass settles each element after everything
/// below it, and the minimum over all predecessors equals the minimum over
/// lower covers because `g` is already monotonic there.
pub fn max_monotonic_lower_bound<V: CountValue>(
    f: &CountFunction<V>,
    domain: &[usize],
) -> Result<BTreeMap<usize, V>, DecompError> {
    let poset = f.poset();
    if !poset.is_upward_closed(domain) {
        return Err(DecompError::DomainNotUpwardClosed);
    }
    let mut sorted = domain.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(lower_bound_on(poset, f.values(), &sorted))
}

/// `domain` must be sorted, deduplicated and upward closed.
pub(crate) fn lower_bound_on<V: CountValue>(
    poset: &PatternPoset,
    values: &[V],
    domain: &[usize],
) -> BTreeMap<usize, V> {
    let mut g: Vec<Option<V>> = vec![None; poset.len()];
    for &m in domain {
        let mut best = values[m].clone();
        for &x in poset.lower_covers(m) {
            if let Some(gx) = &g[x] {
                if *gx < best {
                    best = gx.clone();
                }
            }
        }
        g[m] = Some(best);
    }
    domain
        .iter()
        .map(|&m| (m, g[m].take().expect("domain element assigned")))
        .collect()
}

fn check_candidate<V: CountValue>(
    f: &CountFunction<V>,
    g: &BTreeMap<usize, V>,
    name: &str,
) -> Result<(), DecompError> {
    let poset = f.poset();
    for (&x, gx) in g {
        if x >= poset.len() {
            return Err(DecompError::Contract(format!(
                "{name} has out-of-range element {x}"
            )));
        }
        if gx > f.value(x) {
            return Err(DecompError::Contract(format!(
                "{name} exceeds f at element {x}"
            )));
        }
        for (&z, gz) in g.range(x + 1..) {
            if poset.lt(x, z) && gz > gx {
                return Err(DecompError::Contract(format!(
                    "{name} increases from element {x} to element {z}"
                )));
            }
        }
    }
    Ok(())
}

/// Pointwise maximum of two monotonic lower bounds of `f` sharing a domain.
/// The result is again a monotonic lower bound of `f`.
pub fn pointwise_max<V: CountValue>(
    g1: &BTreeMap<usize, V>,
    g2: &BTreeMap<usize, V>,
    f: &CountFunction<V>,
) -> Result<BTreeMap<usize, V>, DecompError> {
    if !g1.keys().eq(g2.keys()) {
        return Err(DecompError::Contract(
            "inputs have different domains".into(),
        ));
    }
    check_candidate(f, g1, "first input")?;
    check_candidate(f, g2, "second input")?;
    Ok(g1
        .iter()
        .zip(g2.values())
        .map(|((&x, a), b)| (x, a.max(b).clone()))
        .collect())
}
