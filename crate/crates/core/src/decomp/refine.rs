use std::collections::BTreeMap;

use super::{CountFunction, CountValue, DecompError, MonotonicDecomposition, MonotonicTerm};

/// Whether `d1` refines `d2`: every term `(z, h)` of `d1` is dominated by
/// some term `(y, g)` of `d2` with `U_z ⊆ U_y` and `h ≤ g` on `U_z`.
pub fn refines<V: CountValue>(
    d1: &MonotonicDecomposition<V>,
    d2: &MonotonicDecomposition<V>,
) -> Result<bool, DecompError> {
    if !d1.source().same_as(d2.source()) {
        return Err(DecompError::SourceMismatch);
    }
    let poset = d1.source().poset();
    // An identically zero term contributes nothing and is dominated by anything.
    Ok(d1.terms().iter().all(|fine| {
        fine.is_zero()
            || d2.terms().iter().any(|coarse| {
                // U_z ⊆ U_y exactly when y ≤ z.
                poset.leq(coarse.root(), fine.root())
                    && fine
                        .g()
                        .iter()
                        .all(|(x, h)| coarse.value_at(*x).is_some_and(|g| h <= g))
            })
    }))
}

/// Every term is nonzero somewhere.
pub fn is_irredundant<V: CountValue>(d: &MonotonicDecomposition<V>) -> bool {
    d.terms().iter().all(|t| !t.is_zero())
}

pub fn drop_zero_terms<V: CountValue>(d: &MonotonicDecomposition<V>) -> MonotonicDecomposition<V> {
    let terms = d.terms().iter().filter(|t| !t.is_zero()).cloned().collect();
    MonotonicDecomposition::from_parts_unchecked(d.source().clone(), terms)
}

/// The finest irredundant decomposition of an integer-valued `f`: `f(y)`
/// copies of the indicator of `{y}` rooted at `y`, for every `y`.
pub fn max_refined_decomposition<V: CountValue>(
    f: &CountFunction<V>,
) -> Result<MonotonicDecomposition<V>, DecompError> {
    let counts = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v.to_u64_exact().ok_or(DecompError::NonInteger(i)))
        .collect::<Result<Vec<u64>, _>>()?;
    let poset = f.poset();
    let mut terms = Vec::new();
    for (y, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let g: BTreeMap<usize, V> = poset
            .upper_set(y)?
            .into_iter()
            .map(|x| (x, if x == y { V::from_u64(1) } else { V::zero() }))
            .collect();
        let term = MonotonicTerm::new(y, g);
        terms.extend(std::iter::repeat(term).take(count as usize));
    }
    Ok(MonotonicDecomposition::from_parts_unchecked(
        f.clone(),
        terms,
    ))
}
