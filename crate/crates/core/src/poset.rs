//! Message universes, message patterns, and the finite poset of observed
//! patterns ordered by subset inclusion.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use fixedbitset::FixedBitSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PosetError {
    #[error("message name at position {0} is empty")]
    EmptyName(usize),
    #[error("duplicate message name `{0}`")]
    DuplicateName(String),
    #[error("unknown message `{0}`")]
    UnknownMessage(String),
    #[error("pattern width {found} does not match universe width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("message index {index} out of range for width {width}")]
    BitOutOfRange { index: usize, width: usize },
    #[error("element index {index} out of range for poset of {len} elements")]
    IndexOutOfRange { index: usize, len: usize },
}

/// The ordered set of message names a corpus is described over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageUniverse {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl MessageUniverse {
    pub fn new<I, S>(names: I) -> Result<Self, PosetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(PosetError::EmptyName(i));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(PosetError::DuplicateName(name.clone()));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// An empty pattern of this universe's width.
    pub fn empty_pattern(&self) -> MessagePattern {
        MessagePattern::empty(self.len())
    }

    /// Builds a pattern from message names.
    pub fn pattern_of<I, S>(&self, names: I) -> Result<MessagePattern, PosetError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut pattern = self.empty_pattern();
        for name in names {
            let name = name.as_ref();
            let i = self
                .index_of(name)
                .ok_or_else(|| PosetError::UnknownMessage(name.to_owned()))?;
            pattern.insert(i);
        }
        Ok(pattern)
    }

    /// Names of the messages set in `pattern`, in universe order.
    pub fn names_of(&self, pattern: &MessagePattern) -> Vec<String> {
        pattern.ones().map(|i| self.names[i].clone()).collect()
    }
}

/// A fixed-width bitset: bit `j` is set iff message `j` occurred.
///
/// Patterns are totally ordered canonically by popcount first, then by the
/// ascending list of set indices compared lexicographically. This order is a
/// linear extension of subset inclusion.
#[derive(Clone, PartialEq, Eq)]
pub struct MessagePattern {
    bits: FixedBitSet,
}

impl MessagePattern {
    pub fn empty(width: usize) -> Self {
        Self {
            bits: FixedBitSet::with_capacity(width),
        }
    }

    pub fn from_indices<I>(width: usize, indices: I) -> Result<Self, PosetError>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut pattern = Self::empty(width);
        for index in indices {
            if index >= width {
                return Err(PosetError::BitOutOfRange { index, width });
            }
            pattern.insert(index);
        }
        Ok(pattern)
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    /// Panics if `index` is outside the pattern width.
    pub fn insert(&mut self, index: usize) {
        self.bits.insert(index);
    }

    pub fn set(&mut self, index: usize, on: bool) {
        self.bits.set(index, on);
    }

    pub fn contains(&self, index: usize) -> bool {
        self.bits.contains(index)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    /// `self ⊆ other`. Both patterns must share a width.
    pub fn is_subset(&self, other: &MessagePattern) -> bool {
        debug_assert_eq!(self.width(), other.width());
        self.bits.is_subset(&other.bits)
    }

    pub fn is_strict_subset(&self, other: &MessagePattern) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn union(&self, other: &MessagePattern) -> MessagePattern {
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        Self { bits }
    }
}

impl Hash for MessagePattern {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.width().hash(state);
        for i in self.ones() {
            i.hash(state);
        }
    }
}

impl Ord for MessagePattern {
    fn cmp(&self, other: &Self) -> Ordering {
        self.width()
            .cmp(&other.width())
            .then_with(|| self.count_ones().cmp(&other.count_ones()))
            .then_with(|| self.ones().cmp(other.ones()))
    }
}

impl PartialOrd for MessagePattern {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MessagePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.ones().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}/{}", self.width())
    }
}

/// The observed message patterns under subset inclusion.
///
/// Elements are deduplicated and stored in canonical order, so element
/// indices are themselves a linear extension: `i < j` whenever element `i`
/// is a strict subset of element `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternPoset {
    universe: MessageUniverse,
    elements: Vec<MessagePattern>,
    hasse_edges: Vec<(usize, usize)>,
    lower_covers: Vec<Vec<usize>>,
    upper_covers: Vec<Vec<usize>>,
}

impl PatternPoset {
    /// Deduplicates `patterns`, sorts them canonically and computes the
    /// covering relation.
    pub fn build<I>(universe: MessageUniverse, patterns: I) -> Result<Self, PosetError>
    where
        I: IntoIterator<Item = MessagePattern>,
    {
        let width = universe.len();
        let mut elements = Vec::new();
        for pattern in patterns {
            if pattern.width() != width {
                return Err(PosetError::WidthMismatch {
                    expected: width,
                    found: pattern.width(),
                });
            }
            elements.push(pattern);
        }
        elements.sort();
        elements.dedup();

        let n = elements.len();
        // below[j] holds every i with element i strictly below element j.
        let mut below = Vec::with_capacity(n);
        for j in 0..n {
            let mut set = FixedBitSet::with_capacity(n);
            for i in 0..j {
                if elements[i].is_subset(&elements[j]) {
                    set.insert(i);
                }
            }
            below.push(set);
        }

        let mut hasse_edges = Vec::new();
        let mut lower_covers = vec![Vec::new(); n];
        let mut upper_covers = vec![Vec::new(); n];
        for j in 0..n {
            // Largest candidates first: anything not already dominated by a
            // chosen cover is itself a cover.
            let mut dominated = FixedBitSet::with_capacity(n);
            let candidates: Vec<usize> = below[j].ones().collect();
            for &i in candidates.iter().rev() {
                if dominated.contains(i) {
                    continue;
                }
                lower_covers[j].push(i);
                dominated.union_with(&below[i]);
            }
            lower_covers[j].sort_unstable();
            for &i in &lower_covers[j] {
                upper_covers[i].push(j);
                hasse_edges.push((i, j));
            }
        }
        hasse_edges.sort_unstable();

        Ok(Self {
            universe,
            elements,
            hasse_edges,
            lower_covers,
            upper_covers,
        })
    }

    pub fn universe(&self) -> &MessageUniverse {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[MessagePattern] {
        &self.elements
    }

    pub fn element(&self, index: usize) -> &MessagePattern {
        &self.elements[index]
    }

    pub fn index_of(&self, pattern: &MessagePattern) -> Option<usize> {
        self.elements.binary_search(pattern).ok()
    }

    /// Covering pairs `(lower, upper)`, sorted.
    pub fn hasse_edges(&self) -> &[(usize, usize)] {
        &self.hasse_edges
    }

    pub fn lower_covers(&self, index: usize) -> &[usize] {
        &self.lower_covers[index]
    }

    pub fn upper_covers(&self, index: usize) -> &[usize] {
        &self.upper_covers[index]
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        a == b || (a < b && self.elements[a].is_subset(&self.elements[b]))
    }

    pub fn lt(&self, a: usize, b: usize) -> bool {
        a < b && self.elements[a].is_subset(&self.elements[b])
    }

    pub fn check_index(&self, index: usize) -> Result<(), PosetError> {
        if index < self.len() {
            Ok(())
        } else {
            Err(PosetError::IndexOutOfRange {
                index,
                len: self.len(),
            })
        }
    }

    /// All elements `x` with `y ⊆ x`, ascending.
    pub fn upper_set(&self, y: usize) -> Result<Vec<usize>, PosetError> {
        self.check_index(y)?;
        let root = &self.elements[y];
        Ok((y..self.len())
            .filter(|&x| root.is_subset(&self.elements[x]))
            .collect())
    }

    /// Elements of `subset` with no strictly smaller element in `subset`.
    /// Output is ascending and deduplicated.
    pub fn minimal_elements(&self, subset: &[usize]) -> Vec<usize> {
        let mut sorted = subset.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        sorted
            .iter()
            .copied()
            .filter(|&y| !sorted.iter().any(|&x| self.lt(x, y)))
            .collect()
    }

    /// Whether `subset` is closed upward under the subset order.
    pub fn is_upward_closed(&self, subset: &[usize]) -> bool {
        let mut member = FixedBitSet::with_capacity(self.len());
        for &i in subset {
            if i >= self.len() {
                return false;
            }
            member.insert(i);
        }
        subset
            .iter()
            .all(|&i| self.upper_covers[i].iter().all(|&j| member.contains(j)))
    }
}
