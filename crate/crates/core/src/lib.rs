//! Format dialect inference from parser message patterns.
//!
//! Files are run through parsers; each configured rule turns parser output
//! into a Boolean message. The set of messages a file elicits is its
//! pattern. Counting files per pattern gives a function on the poset of
//! observed patterns, and decomposing that function into monotonic
//! decreasing terms over upper sets yields candidate dialects, each
//! identified by its required messages.

pub mod decomp;
pub mod ingest;
pub mod model;
pub mod poset;
pub mod report;

pub use decomp::{
    count_violations, decompose, decompose_with, dialect_count_lower_bound, drop_zero_terms,
    enumerate_integer_decompositions, irredundant_cover, is_irredundant, max_monotonic_lower_bound,
    max_refined_decomposition, pointwise_max, refines, CountFunction, CountValue, DecompError,
    DecomposeTrace, MonotonicDecomposition, MonotonicTerm, SelectionOrder,
};
pub use poset::{MessagePattern, MessageUniverse, PatternPoset, PosetError};
