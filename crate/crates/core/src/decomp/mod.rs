//! Monotonic decompositions of nonnegative functions on a pattern poset.
//!
//! A decomposition writes `f = Σ_k 1_{U_{y_k}} · g_k` where every `g_k` is
//! monotonic decreasing on the upper set `U_{y_k}`. Each term is a dialect
//! candidate whose root `y_k` is its required-message pattern.

mod bound;
mod cover;
mod enumerate;
mod greedy;
mod refine;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::poset::{PatternPoset, PosetError};

pub use bound::{count_violations, max_monotonic_lower_bound, pointwise_max};
pub use cover::{dialect_count_lower_bound, irredundant_cover};
pub use enumerate::{
    enumerate_integer_decompositions, ENUMERATION_MAX_ELEMENTS, ENUMERATION_MAX_TOTAL,
};
pub use greedy::{decompose, decompose_with, DecomposeTrace, SelectionOrder};
pub use refine::{drop_zero_terms, is_irredundant, max_refined_decomposition, refines};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecompError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("function has {found} values but the poset has {expected} elements")]
    LengthMismatch { expected: usize, found: usize },
    #[error("value at element {0} is negative")]
    NegativeValue(usize),
    #[error("domain is not upward closed")]
    DomainNotUpwardClosed,
    #[error("term {term}: {reason}")]
    InvalidTerm { term: usize, reason: String },
    #[error("terms do not reconstruct the source function at element {0}")]
    Reconstruction(usize),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("decompositions have different source functions")]
    SourceMismatch,
    #[error("supports leave elements {0:?} of the support uncovered")]
    NotCovering(Vec<usize>),
    #[error("value at element {0} is not a nonnegative integer")]
    NonInteger(usize),
    #[error(
        "instance too large to enumerate: {elements} elements and total {total} \
         (limits {max_elements} elements, total {max_total})"
    )]
    TooLarge {
        elements: usize,
        total: String,
        max_elements: usize,
        max_total: u64,
    },
}

/// Exact nonnegative numbers a count function can take.
pub trait CountValue:
    Clone + Ord + fmt::Debug + fmt::Display + Zero + Add<Output = Self> + Sub<Output = Self>
{
    fn from_u64(n: u64) -> Self;

    /// `Some(n)` when the value is a nonnegative integer that fits in `u64`.
    fn to_u64_exact(&self) -> Option<u64>;
}

impl CountValue for u64 {
    fn from_u64(n: u64) -> Self {
        n
    }

    fn to_u64_exact(&self) -> Option<u64> {
        Some(*self)
    }
}

impl CountValue for BigRational {
    fn from_u64(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_u64_exact(&self) -> Option<u64> {
        if self.is_integer() {
            self.to_integer().to_u64()
        } else {
            None
        }
    }
}

/// A nonnegative function on the elements of a poset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountFunction<V = u64> {
    poset: Arc<PatternPoset>,
    values: Vec<V>,
}

impl<V: CountValue> CountFunction<V> {
    pub fn new(poset: Arc<PatternPoset>, values: Vec<V>) -> Result<Self, DecompError> {
        if values.len() != poset.len() {
            return Err(DecompError::LengthMismatch {
                expected: poset.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| *v < V::zero()) {
            return Err(DecompError::NegativeValue(i));
        }
        Ok(Self { poset, values })
    }

    pub fn zeros(poset: Arc<PatternPoset>) -> Self {
        let values = vec![V::zero(); poset.len()];
        Self { poset, values }
    }

    pub fn poset(&self) -> &PatternPoset {
        &self.poset
    }

    pub fn poset_arc(&self) -> &Arc<PatternPoset> {
        &self.poset
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn value(&self, index: usize) -> &V {
        &self.values[index]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> V {
        self.values.iter().cloned().fold(V::zero(), |a, b| a + b)
    }

    /// Elements with a strictly positive value, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !self.values[i].is_zero())
            .collect()
    }

    pub fn is_monotonic_decreasing(&self) -> bool {
        bound::violations_of(&self.poset, &self.values).is_empty()
    }

    /// Same poset (structurally) and same values.
    pub fn same_as(&self, other: &CountFunction<V>) -> bool {
        (Arc::ptr_eq(&self.poset, &other.poset) || self.poset == other.poset)
            && self.values == other.values
    }
}

/// One term `1_{U_root} · g` of a monotonic decomposition. `g` is stored only
/// on the upper set of `root`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MonotonicTerm<V = u64> {
    root: usize,
    g: BTreeMap<usize, V>,
}

impl<V: CountValue> MonotonicTerm<V> {
    /// `g` must be keyed by exactly the upper set of `root`; checked when the
    /// term is placed in a [`MonotonicDecomposition`].
    pub fn new(root: usize, g: BTreeMap<usize, V>) -> Self {
        Self { root, g }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn g(&self) -> &BTreeMap<usize, V> {
        &self.g
    }

    pub fn value_at(&self, x: usize) -> Option<&V> {
        self.g.get(&x)
    }

    /// `g(root)`, the file count at the root.
    pub fn root_count(&self) -> &V {
        &self.g[&self.root]
    }

    pub fn is_zero(&self) -> bool {
        self.g.values().all(Zero::is_zero)
    }

    /// Indices of the upper set this term is supported on.
    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.g.keys().copied()
    }

    fn is_monotonic_on(&self, poset: &PatternPoset) -> bool {
        self.g.iter().all(|(&x, gx)| {
            poset
                .upper_covers(x)
                .iter()
                .all(|z| self.g.get(z).map_or(true, |gz| gz <= gx))
        })
    }
}

/// An ordered list of terms that sum to their source function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonicDecomposition<V = u64> {
    source: CountFunction<V>,
    terms: Vec<MonotonicTerm<V>>,
}

impl<V: CountValue> MonotonicDecomposition<V> {
    /// Validates every term (domain, monotonicity, nonnegativity) and exact
    /// reconstruction of `source`.
    pub fn new(
        source: CountFunction<V>,
        terms: Vec<MonotonicTerm<V>>,
    ) -> Result<Self, DecompError> {
        let poset = source.poset();
        for (k, term) in terms.iter().enumerate() {
            let invalid = |reason: &str| DecompError::InvalidTerm {
                term: k,
                reason: reason.to_owned(),
            };
            let upper = poset
                .upper_set(term.root)
                .map_err(|_| invalid("root out of range"))?;
            if !term.g.keys().copied().eq(upper.iter().copied()) {
                return Err(invalid(
                    "g is not defined exactly on the upper set of its root",
                ));
            }
            if term.g.values().any(|v| *v < V::zero()) {
                return Err(invalid("g takes a negative value"));
            }
            if !term.is_monotonic_on(poset) {
                return Err(invalid("g is not monotonic decreasing"));
            }
        }
        let decomposition = Self { source, terms };
        let rebuilt = decomposition.reconstruct();
        if let Some(x) = (0..rebuilt.len()).find(|&x| rebuilt[x] != decomposition.source.values[x])
        {
            return Err(DecompError::Reconstruction(x));
        }
        Ok(decomposition)
    }

    pub(crate) fn from_parts_unchecked(
        source: CountFunction<V>,
        terms: Vec<MonotonicTerm<V>>,
    ) -> Self {
        Self { source, terms }
    }

    pub fn source(&self) -> &CountFunction<V> {
        &self.source
    }

    pub fn terms(&self) -> &[MonotonicTerm<V>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn roots(&self) -> Vec<usize> {
        self.terms.iter().map(|t| t.root).collect()
    }

    /// `Σ_k 1_{U_k}(x) g_k(x)` for every element `x`.
    pub fn reconstruct(&self) -> Vec<V> {
        let mut sums = vec![V::zero(); self.source.len()];
        for term in &self.terms {
            for (&x, v) in &term.g {
                sums[x] = sums[x].clone() + v.clone();
            }
        }
        sums
    }

    /// Terms sorted by `(root, g)`, so two decompositions that differ only by
    /// term order compare equal.
    pub fn canonical_terms(&self) -> Vec<MonotonicTerm<V>> {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| a.root.cmp(&b.root).then_with(|| a.g.iter().cmp(b.g.iter())));
        terms
    }

    pub fn same_up_to_reorder(&self, other: &MonotonicDecomposition<V>) -> bool {
        self.source.same_as(&other.source) && self.canonical_terms() == other.canonical_terms()
    }

    /// Appends a term without revalidating. Used to build redundant
    /// decompositions; a zero term keeps reconstruction intact.
    pub fn with_zero_term(mut self, root: usize) -> Result<Self, DecompError> {
        let upper = self.source.poset().upper_set(root)?;
        let g = upper.into_iter().map(|x| (x, V::zero())).collect();
        self.terms.push(MonotonicTerm::new(root, g));
        Ok(self)
    }
}
