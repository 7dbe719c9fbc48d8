//! Inputs for the benchmarks.

use std::sync::Arc;

use dialect_core::ingest::aggregate_counts;
use dialect_core::model::{synthesize_matrix, MixtureSpec};
use dialect_core::{CountFunction, MessagePattern, MessageUniverse, PatternPoset};

/// A mixture of `dialects` dialects over `messages` messages. Dialect `k`
/// requires message `k` and sees the next four messages (cyclically) with
/// marginals 0.1 to 0.4, so neighbouring supports overlap.
pub fn ring_spec(messages: usize, dialects: usize) -> MixtureSpec {
    assert!(dialects >= 1 && dialects <= messages && messages > 4);
    // Whole thousandths that sum to 1000.
    let base = 1000 / dialects;
    let mut weights = vec![base; dialects];
    weights[0] += 1000 - base * dialects;
    let names: Vec<String> = (0..messages).map(|j| format!("\"m{j}\"")).collect();
    let entries: Vec<String> = (0..dialects)
        .map(|k| {
            let marginals: Vec<String> = (1..=4)
                .map(|i| format!("\"m{}\": 0.{i}", (k + i) % messages))
                .collect();
            format!(
                "{{\"required\": [\"m{k}\"], \"marginals\": {{{}}}, \"weight\": {}}}",
                marginals.join(", "),
                thousandths(weights[k])
            )
        })
        .collect();
    let json = format!(
        "{{\"messages\": [{}], \"dialects\": [{}]}}",
        names.join(", "),
        entries.join(", ")
    );
    MixtureSpec::from_json_str(&json).expect("valid generated spec")
}

fn thousandths(w: usize) -> String {
    if w == 1000 {
        "1".to_owned()
    } else {
        format!("0.{w:03}")
    }
}

/// Pattern counts of `n_files` files sampled from [`ring_spec`].
pub fn sampled_counts(messages: usize, dialects: usize, n_files: usize, seed: u64) -> CountFunction<u64> {
    aggregate_counts(&synthesize_matrix(&ring_spec(messages, dialects), n_files, seed)).1
}

/// Every subset of `width` messages, with counts decreasing in popcount
/// except for a bump on each pair, which makes every pair a violator.
pub fn boolean_lattice_counts(width: usize) -> CountFunction<u64> {
    let u = MessageUniverse::new((0..width).map(|j| format!("m{j}"))).unwrap();
    let patterns = (0u32..1 << width).map(|m| {
        MessagePattern::from_indices(width, (0..width).filter(|j| m >> j & 1 == 1)).unwrap()
    });
    let poset = Arc::new(PatternPoset::build(u, patterns).unwrap());
    let values = poset
        .elements()
        .iter()
        .map(|p| match p.count_ones() {
            2 => 100,
            k => 60u64.saturating_sub(10 * k as u64) + 1,
        })
        .collect();
    CountFunction::new(poset, values).unwrap()
}
