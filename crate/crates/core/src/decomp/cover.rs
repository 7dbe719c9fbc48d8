use fixedbitset::FixedBitSet;

use super::{CountFunction, CountValue, DecompError, MonotonicDecomposition};

/// Reduces a cover of `supp(f)` by upper sets to an irredundant one.
///
/// Each upper set is given by its root and is taken relative to `supp(f)`.
/// Sets are scanned in canonical root order; the first one contained in the
/// union of the others is removed and the scan restarts, until no member is
/// redundant. Returns the surviving roots in canonical order.
pub fn irredundant_cover<V: CountValue>(
    f: &CountFunction<V>,
    roots: &[usize],
) -> Result<Vec<usize>, DecompError> {
    let poset = f.poset();
    let n = poset.len();
    let mut support = FixedBitSet::with_capacity(n);
    for x in f.support() {
        support.insert(x);
    }

    let mut members: Vec<(usize, FixedBitSet)> = Vec::with_capacity(roots.len());
    let mut sorted = roots.to_vec();
    sorted.sort_unstable();
    for root in sorted {
        let mut set = FixedBitSet::with_capacity(n);
        for x in poset.upper_set(root)? {
            set.insert(x);
        }
        set.intersect_with(&support);
        members.push((root, set));
    }

    let mut union = FixedBitSet::with_capacity(n);
    for (_, set) in &members {
        union.union_with(set);
    }
    if !support.is_subset(&union) {
        let uncovered = support.difference(&union).collect();
        return Err(DecompError::NotCovering(uncovered));
    }

    'scan: loop {
        for i in 0..members.len() {
            let mut others = FixedBitSet::with_capacity(n);
            for (j, (_, set)) in members.iter().enumerate() {
                if j != i {
                    others.union_with(set);
                }
            }
            if members[i].1.is_subset(&others) {
                members.remove(i);
                continue 'scan;
            }
        }
        break;
    }
    Ok(members.into_iter().map(|(root, _)| root).collect())
}

/// Size of the irredundant cover formed from the term supports of `d`.
pub fn dialect_count_lower_bound<V: CountValue>(d: &MonotonicDecomposition<V>) -> usize {
    irredundant_cover(d.source(), &d.roots())
        .expect("the term supports of a decomposition cover the support of its source")
        .len()
}
