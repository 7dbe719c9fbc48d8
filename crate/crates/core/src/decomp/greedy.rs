use fixedbitset::FixedBitSet;

use super::bound::{lower_bound_on, violations_of};
use super::{CountFunction, CountValue, DecompError, MonotonicDecomposition, MonotonicTerm};

/// Priority used whenever the greedy construction must choose among
/// incomparable candidates: the minimal violating element to extract next,
/// and the ordering of minimal support elements in the final monotone pass.
/// Lower rank is chosen first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionOrder {
    rank: Vec<usize>,
}

impl SelectionOrder {
    /// Canonical poset order (element index).
    pub fn canonical(len: usize) -> Self {
        Self {
            rank: (0..len).collect(),
        }
    }

    /// `preferred` lists element indices from most to least preferred and
    /// must be a permutation of `0..len`.
    pub fn from_preference(preferred: &[usize]) -> Result<Self, DecompError> {
        let n = preferred.len();
        let mut rank = vec![usize::MAX; n];
        for (r, &i) in preferred.iter().enumerate() {
            if i >= n || rank[i] != usize::MAX {
                return Err(DecompError::Contract(
                    "selection order is not a permutation of the elements".into(),
                ));
            }
            rank[i] = r;
        }
        Ok(Self { rank })
    }

    fn first(&self, candidates: &[usize]) -> Option<usize> {
        candidates.iter().copied().min_by_key(|&i| self.rank[i])
    }

    fn sorted(&self, candidates: &[usize]) -> Vec<usize> {
        let mut out = candidates.to_vec();
        out.sort_by_key(|&i| self.rank[i]);
        out
    }
}

/// Bookkeeping from one run of [`decompose_with`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecomposeTrace {
    /// Number of violating elements of the residual before each extraction,
    /// ending with the final (zero) count.
    pub violation_counts: Vec<usize>,
    /// Number of terms produced while the residual still had violations.
    pub extraction_terms: usize,
}

/// Greedy monotonic decomposition with canonical tie-breaking.
pub fn decompose<V: CountValue>(f: &CountFunction<V>) -> MonotonicDecomposition<V> {
    decompose_with(f, &SelectionOrder::canonical(f.len())).0
}

/// Greedy monotonic decomposition.
///
/// While the residual has violations, take the first (by `order`) minimal
/// violating element `y`, extract the maximal monotonic lower bound of the
/// residual on `U_y` as a term, and subtract it. Once the residual is
/// monotonic decreasing, split it across the minimal elements of its support
/// `y_1, …, y_m` (in `order`), giving term `i` the residual on
/// `U_{y_i} \ ∪_{j<i} U_{y_j}` and zero elsewhere. Zero terms are dropped.
///
/// Panics if `order` was built for a different number of elements.
pub fn decompose_with<V: CountValue>(
    f: &CountFunction<V>,
    order: &SelectionOrder,
) -> (MonotonicDecomposition<V>, DecomposeTrace) {
    assert_eq!(order.rank.len(), f.len(), "selection order length");
    let poset = f.poset();
    let mut residual = f.values().to_vec();
    let mut terms = Vec::new();
    let mut trace = DecomposeTrace::default();

    loop {
        let violations = violations_of(poset, &residual);
        if let Some(&previous) = trace.violation_counts.last() {
            assert!(
                violations.len() < previous,
                "extraction must remove at least one violation"
            );
        }
        trace.violation_counts.push(violations.len());
        if violations.is_empty() {
            break;
        }
        let minimal = poset.minimal_elements(&violations);
        let y = order.first(&minimal).expect("nonempty violation set");
        let domain = poset.upper_set(y).expect("valid index");
        let g = lower_bound_on(poset, &residual, &domain);
        assert!(
            g[&y] == residual[y],
            "extracted term keeps the full residual at its root"
        );
        for (&x, v) in &g {
            residual[x] = residual[x].clone() - v.clone();
        }
        let term = MonotonicTerm::new(y, g);
        debug_assert!(term.is_monotonic_on(poset));
        if !term.is_zero() {
            terms.push(term);
        }
    }
    trace.extraction_terms = terms.len();

    let support: Vec<usize> = (0..residual.len())
        .filter(|&i| !residual[i].is_zero())
        .collect();
    let mut claimed = FixedBitSet::with_capacity(residual.len());
    for y in order.sorted(&poset.minimal_elements(&support)) {
        let domain = poset.upper_set(y).expect("valid index");
        let g = domain
            .iter()
            .map(|&x| {
                let v = if claimed.contains(x) {
                    V::zero()
                } else {
                    residual[x].clone()
                };
                (x, v)
            })
            .collect();
        for &x in &domain {
            claimed.insert(x);
        }
        let term = MonotonicTerm::new(y, g);
        debug_assert!(term.is_monotonic_on(poset));
        if !term.is_zero() {
            terms.push(term);
        }
    }

    let decomposition = MonotonicDecomposition::from_parts_unchecked(f.clone(), terms);
    debug_assert!(decomposition.reconstruct() == f.values());
    (decomposition, trace)
}
