//! The generative model behind dialects.
//!
//! A dialect fixes a set of required messages that always occur; every other
//! message occurs independently with its own probability, strictly below
//! one half. A corpus is a weighted mixture of dialects, each file drawn
//! from exactly one of them.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::decomp::{CountFunction, CountValue};
use crate::ingest::{FileMessageMatrix, MatrixRow, Provenance};
use crate::poset::{MessagePattern, MessageUniverse, PatternPoset, PosetError};

/// Identifier recorded in sampled output so draws can be replayed.
pub const SAMPLER_ALGORITHM: &str = "rand_chacha::ChaCha8Rng::seed_from_u64";

/// Largest number of support patterns [`support_patterns`] will enumerate.
pub const MAX_SUPPORT_PATTERNS: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
    #[error("pattern width {found} does not match universe width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("support has more than {0} patterns")]
    SupportTooLarge(usize),
    #[error("malformed spec JSON: {0}")]
    Json(String),
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// One dialect: its required messages, the occurrence probability of every
/// other message, and its mixture weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DialectSpec {
    required: MessagePattern,
    /// Non-required messages with a nonzero marginal; absent means 0.
    marginals: BTreeMap<usize, BigRational>,
    weight: BigRational,
}

impl DialectSpec {
    pub fn new(
        required: MessagePattern,
        marginals: BTreeMap<usize, BigRational>,
        weight: BigRational,
    ) -> Result<Self, ModelError> {
        let half = BigRational::new(1.into(), 2.into());
        for (&j, p) in &marginals {
            let field = format!("marginals[{j}]");
            if j >= required.width() {
                return Err(invalid(field, "message index out of range"));
            }
            if required.contains(j) {
                return Err(invalid(field, "required messages carry no marginal"));
            }
            if p.is_negative() || *p >= half {
                return Err(invalid(field, format!("{p} is outside [0, 1/2)")));
            }
        }
        if !weight.is_positive() || weight > BigRational::one() {
            return Err(invalid("weight", format!("{weight} is outside (0, 1]")));
        }
        let marginals = marginals
            .into_iter()
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Ok(Self {
            required,
            marginals,
            weight,
        })
    }

    pub fn required(&self) -> &MessagePattern {
        &self.required
    }

    pub fn width(&self) -> usize {
        self.required.width()
    }

    pub fn weight(&self) -> &BigRational {
        &self.weight
    }

    /// `P(message j occurs | dialect)` for a non-required message.
    pub fn marginal(&self, j: usize) -> BigRational {
        self.marginals
            .get(&j)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn marginals(&self) -> &BTreeMap<usize, BigRational> {
        &self.marginals
    }
}

/// A weighted mixture of dialects over one message universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixtureSpec {
    universe: MessageUniverse,
    dialects: Vec<DialectSpec>,
}

impl MixtureSpec {
    pub fn new(universe: MessageUniverse, dialects: Vec<DialectSpec>) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        let mut total = BigRational::zero();
        for (k, d) in dialects.iter().enumerate() {
            if d.width() != universe.len() {
                return Err(invalid(
                    format!("dialects[{k}].required"),
                    format!(
                        "width {} does not match {} messages",
                        d.width(),
                        universe.len()
                    ),
                ));
            }
            if !seen.insert(d.required.clone()) {
                return Err(invalid(
                    format!("dialects[{k}].required"),
                    "duplicates the required set of an earlier dialect",
                ));
            }
            total += d.weight.clone();
        }
        if total != BigRational::one() {
            return Err(invalid(
                "dialects[].weight",
                format!("weights sum to {total}, not 1"),
            ));
        }
        Ok(Self { universe, dialects })
    }

    pub fn universe(&self) -> &MessageUniverse {
        &self.universe
    }

    pub fn dialects(&self) -> &[DialectSpec] {
        &self.dialects
    }

    pub fn from_json_str(text: &str) -> Result<Self, ModelError> {
        let raw: MixtureSpecJson =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        raw.into_spec()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let dialects: Vec<serde_json::Value> = self
            .dialects
            .iter()
            .map(|d| {
                let marginals: serde_json::Map<String, serde_json::Value> = d
                    .marginals
                    .iter()
                    .map(|(&j, p)| (self.universe.names()[j].clone(), rational_to_json(p)))
                    .collect();
                serde_json::json!({
                    "required": self.universe.names_of(&d.required),
                    "marginals": marginals,
                    "weight": rational_to_json(&d.weight),
                })
            })
            .collect();
        serde_json::json!({ "messages": self.universe.names(), "dialects": dialects })
    }

    /// SHA-256 over the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(&self.to_json_value()).expect("serializable");
        hex_digest(canonical.as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn rational_to_json(r: &BigRational) -> serde_json::Value {
    match r.to_u64_exact() {
        Some(n) => serde_json::Value::from(n),
        None => serde_json::Value::from(r.to_f64().unwrap_or(f64::NAN)),
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct MixtureSpecJson {
    messages: Vec<String>,
    dialects: Vec<DialectJson>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct DialectJson {
    required: Vec<String>,
    #[serde(default)]
    marginals: BTreeMap<String, serde_json::Number>,
    weight: serde_json::Number,
}

impl MixtureSpecJson {
    fn into_spec(self) -> Result<MixtureSpec, ModelError> {
        let universe = MessageUniverse::new(self.messages)?;
        let mut dialects = Vec::with_capacity(self.dialects.len());
        for (k, d) in self.dialects.into_iter().enumerate() {
            let required = universe
                .pattern_of(&d.required)
                .map_err(|e| invalid(format!("dialects[{k}].required"), e.to_string()))?;
            let mut marginals = BTreeMap::new();
            for (name, p) in &d.marginals {
                let field = format!("dialects[{k}].marginals.{name}");
                let j = universe
                    .index_of(name)
                    .ok_or_else(|| invalid(field.clone(), "unknown message"))?;
                let p = decimal_to_rational(&p.to_string())
                    .ok_or_else(|| invalid(field.clone(), "not a decimal number"))?;
                marginals.insert(j, p);
            }
            let weight = decimal_to_rational(&d.weight.to_string())
                .ok_or_else(|| invalid(format!("dialects[{k}].weight"), "not a decimal number"))?;
            let dialect = DialectSpec::new(required, marginals, weight).map_err(|e| match e {
                ModelError::Invalid { field, reason } => {
                    let field = match field.strip_prefix("marginals[") {
                        Some(rest) => {
                            let j: usize = rest.trim_end_matches(']').parse().unwrap_or(0);
                            format!("dialects[{k}].marginals.{}", universe.names()[j])
                        }
                        None => format!("dialects[{k}].{field}"),
                    };
                    ModelError::Invalid { field, reason }
                }
                other => other,
            })?;
            dialects.push(dialect);
        }
        MixtureSpec::new(universe, dialects)
    }
}

/// Exact value of a decimal literal such as `0.25`, `3` or `1.5e-2`.
pub fn decimal_to_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

/// Probability of `pattern` within one dialect: zero unless every required
/// message is present, otherwise the product over non-required messages of
/// the marginal (message present) or its complement (absent).
pub fn pattern_probability(
    dialect: &DialectSpec,
    pattern: &MessagePattern,
) -> Result<BigRational, ModelError> {
    if pattern.width() != dialect.width() {
        return Err(ModelError::WidthMismatch {
            expected: dialect.width(),
            found: pattern.width(),
        });
    }
    if !dialect.required.is_subset(pattern) {
        return Ok(BigRational::zero());
    }
    let mut product = BigRational::one();
    for j in 0..dialect.width() {
        if dialect.required.contains(j) {
            continue;
        }
        let p = dialect.marginal(j);
        if pattern.contains(j) {
            if p.is_zero() {
                return Ok(BigRational::zero());
            }
            product *= p;
        } else {
            product *= BigRational::one() - p;
        }
    }
    Ok(product)
}

/// `Σ_A P(A) · P(pattern | A)` over the dialects of `spec`.
pub fn mixture_probability(
    spec: &MixtureSpec,
    pattern: &MessagePattern,
) -> Result<BigRational, ModelError> {
    let mut total = BigRational::zero();
    for d in &spec.dialects {
        total += d.weight.clone() * pattern_probability(d, pattern)?;
    }
    Ok(total)
}

/// Every pattern with positive probability under `spec`, in canonical order.
pub fn support_patterns(spec: &MixtureSpec) -> Result<Vec<MessagePattern>, ModelError> {
    let mut all = HashSet::new();
    for d in &spec.dialects {
        let free: Vec<usize> = d.marginals.keys().copied().collect();
        if free.len() >= usize::BITS as usize - 1 || (1usize << free.len()) > MAX_SUPPORT_PATTERNS {
            return Err(ModelError::SupportTooLarge(MAX_SUPPORT_PATTERNS));
        }
        for mask in 0usize..(1 << free.len()) {
            let mut pattern = d.required.clone();
            for (b, &j) in free.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    pattern.insert(j);
                }
            }
            all.insert(pattern);
            if all.len() > MAX_SUPPORT_PATTERNS {
                return Err(ModelError::SupportTooLarge(MAX_SUPPORT_PATTERNS));
            }
        }
    }
    let mut patterns: Vec<MessagePattern> = all.into_iter().collect();
    patterns.sort();
    Ok(patterns)
}

/// The poset of all support patterns of `spec`.
pub fn support_poset(spec: &MixtureSpec) -> Result<Arc<PatternPoset>, ModelError> {
    let patterns = support_patterns(spec)?;
    Ok(Arc::new(PatternPoset::build(
        spec.universe.clone(),
        patterns,
    )?))
}

/// `n_files · P(x)` at every element of `poset`, exactly.
pub fn expected_count_function(
    spec: &MixtureSpec,
    n_files: u64,
    poset: Arc<PatternPoset>,
) -> Result<CountFunction<BigRational>, ModelError> {
    if poset.universe().len() != spec.universe.len() {
        return Err(ModelError::WidthMismatch {
            expected: spec.universe.len(),
            found: poset.universe().len(),
        });
    }
    let n = BigRational::from_u64(n_files);
    let values = poset
        .elements()
        .iter()
        .map(|x| mixture_probability(spec, x).map(|p| p * n.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CountFunction::new(poset, values).expect("probabilities are nonnegative"))
}

/// Draws `n_files` independent patterns: pick a dialect by weight, switch on
/// its required messages, then switch on each other message with its
/// marginal probability. Deterministic for a given `seed`.
pub fn sample_corpus(spec: &MixtureSpec, n_files: usize, seed: u64) -> Vec<MessagePattern> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cumulative = Vec::with_capacity(spec.dialects.len());
    let mut acc = 0.0;
    for d in &spec.dialects {
        acc += d.weight.to_f64().unwrap_or(0.0);
        cumulative.push(acc);
    }
    let marginals: Vec<Vec<(usize, f64)>> = spec
        .dialects
        .iter()
        .map(|d| {
            d.marginals
                .iter()
                .map(|(&j, p)| (j, p.to_f64().unwrap_or(0.0)))
                .collect()
        })
        .collect();

    (0..n_files)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * acc;
            let k = cumulative
                .iter()
                .position(|&c| u < c)
                .unwrap_or(spec.dialects.len() - 1);
            let mut pattern = spec.dialects[k].required.clone();
            for &(j, p) in &marginals[k] {
                if rng.gen::<f64>() < p {
                    pattern.insert(j);
                }
            }
            pattern
        })
        .collect()
}

/// [`sample_corpus`] packaged as a file/message matrix whose provenance
/// records the spec digest, seed and generator.
pub fn synthesize_matrix(spec: &MixtureSpec, n_files: usize, seed: u64) -> FileMessageMatrix {
    let width = n_files.saturating_sub(1).to_string().len().max(1);
    let rows = sample_corpus(spec, n_files, seed)
        .into_iter()
        .enumerate()
        .map(|(i, pattern)| MatrixRow {
            file: format!("synth-{i:0width$}"),
            pattern,
        })
        .collect();
    let mut provenance = Provenance::default();
    provenance.insert("spec_digest", spec.digest());
    provenance.insert("seed", seed);
    provenance.insert("rng", SAMPLER_ALGORITHM);
    provenance.insert("n_files", n_files);
    FileMessageMatrix::new(spec.universe.clone(), rows, provenance)
        .expect("sampled patterns share the spec universe")
}
