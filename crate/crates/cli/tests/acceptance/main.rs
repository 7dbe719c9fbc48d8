//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails. Brute-force references live in `oracle`.


use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dialect_core::ingest::{
    aggregate_counts, invert_frequent_messages, load_pattern_counts, run_harness,
    FileMessageMatrix, HarnessConfig,
};
use dialect_core::model::{
    expected_count_function, pattern_probability, support_poset, synthesize_matrix, MixtureSpec,
};
use dialect_core::report::{decompose_report, Annotations, SortOrder, DEFAULT_MIN_COUNT};
use dialect_core::{
    decompose, decompose_with, dialect_count_lower_bound, max_monotonic_lower_bound,
    max_refined_decomposition, CountFunction, CountValue, MessagePattern, MonotonicDecomposition,
    MonotonicTerm, PatternPoset, SelectionOrder,
};

use oracle::{Below, Decomp};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Runs `work` over `items` on every available core, preserving order.
fn par_map<T: Sync, R: Send>(items: &[T], work: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism().map_or(1, usize::from);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<R>>> =
        items.iter().map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = work(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().unwrap())
        .collect()
}

// The diamond.

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;
const D: usize = 3;

fn diamond() -> Arc<PatternPoset> {
    let u = dialect_core::MessageUniverse::new(["b", "c"]).unwrap();
    let pats = [vec![], vec!["b"], vec!["c"], vec!["b", "c"]]
        .into_iter()
        .map(|names| u.pattern_of(names).unwrap());
    let p = Arc::new(PatternPoset::build(u.clone(), pats).unwrap());
    for (i, names) in [vec![], vec!["b"], vec!["c"], vec!["b", "c"]].iter().enumerate() {
        assert_eq!(p.index_of(&u.pattern_of(names.clone()).unwrap()), Some(i));
    }
    p
}

fn term(root: usize, g: &[(usize, u64)]) -> MonotonicTerm<u64> {
    MonotonicTerm::new(root, g.iter().copied().collect())
}

fn criterion_1() -> Outcome {
    let p = diamond();
    let f = CountFunction::new(Arc::clone(&p), vec![0, 4, 4, 5]).unwrap();
    let d = decompose(&f);
    let mut problems = Vec::new();
    let mut roots = d.roots();
    roots.sort_unstable();
    if roots != [B, C] {
        problems.push(format!("roots {roots:?}"));
    }
    if d.terms().iter().any(|t| t.is_zero()) {
        problems.push("zero term".into());
    }
    if d.reconstruct() != f.values() {
        problems.push("reconstruction".into());
    }
    if MonotonicDecomposition::new(f.clone(), d.terms().to_vec()).is_err() {
        problems.push("terms fail validation".into());
    }
    let at_d: u64 = d.terms().iter().filter_map(|t| t.value_at(D)).sum();
    if at_d != 5 {
        problems.push(format!("g_B(D) + g_C(D) = {at_d}"));
    }
    for (x, y) in [(2, 3), (3, 2)] {
        let split = vec![term(B, &[(B, 4), (D, x)]), term(C, &[(C, 4), (D, y)])];
        if MonotonicDecomposition::new(f.clone(), split).is_err() {
            problems.push(format!("split ({x},{y}) rejected"));
        }
    }
    let mut times: Vec<Duration> = (0..201)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(decompose(std::hint::black_box(&f)));
            start.elapsed()
        })
        .collect();
    times.sort();
    let median = times[times.len() / 2];
    if median >= Duration::from_millis(1) {
        problems.push(format!("median runtime {median:?}"));
    }
    let splits: Vec<String> = d
        .terms()
        .iter()
        .map(|t| format!("{}:{}", ["A", "B", "C", "D"][t.root()], t.value_at(D).unwrap()))
        .collect();
    Outcome::new(
        problems.is_empty(),
        format!(
            "terms at D {}; median {median:?}{}",
            splits.join(" "),
            failures(&problems)
        ),
    )
}

fn failures(problems: &[String]) -> String {
    if problems.is_empty() {
        String::new()
    } else {
        format!("; {}", problems.join(", "))
    }
}

fn criterion_2() -> Outcome {
    let p = diamond();
    let bc = SelectionOrder::from_preference(&[A, B, C, D]).unwrap();
    let cb = SelectionOrder::from_preference(&[A, C, B, D]).unwrap();
    let mut cases = [0usize; 4];
    let mut problems = Vec::new();
    for fb in 0..=6u64 {
        for fc in 0..=6u64 {
            for fd in 0..=6u64 {
                let f = CountFunction::new(Arc::clone(&p), vec![0, fb, fc, fd]).unwrap();
                let (d1, _) = decompose_with(&f, &bc);
                let (d2, _) = decompose_with(&f, &cb);
                for d in [&d1, &d2] {
                    if d.reconstruct() != f.values() || d.terms().iter().any(|t| t.is_zero()) {
                        problems.push(format!("({fb},{fc},{fd}) invalid output"));
                    }
                }
                // Name the smaller of f(b), f(c) as "b".
                let (lo, hi) = (fb.min(fc), fb.max(fc));
                let ok = if lo == 0 && hi == 0 {
                    cases[0] += 1;
                    let want: Vec<(usize, u64)> = if fd > 0 { vec![(D, fd)] } else { vec![] };
                    [&d1, &d2].iter().all(|d| {
                        d.terms()
                            .iter()
                            .map(|t| (t.root(), *t.root_count()))
                            .collect::<Vec<_>>()
                            == want
                            && d.terms().iter().all(|t| t.g().len() == 1)
                    })
                } else if lo == 0 && fd > hi {
                    cases[1] += 1;
                    [&d1, &d2].iter().all(|d| {
                        d.terms()
                            .iter()
                            .any(|t| t.root() == D && *t.root_count() == fd - hi)
                    })
                } else if lo == 0 {
                    cases[2] += 1;
                    d1.len() == 1 && d2.len() == 1
                } else {
                    cases[3] += 1;
                    d1.len() == d2.len()
                };
                if !ok {
                    problems.push(format!(
                        "({fb},{fc},{fd}): {} vs {} terms",
                        d1.len(),
                        d2.len()
                    ));
                }
            }
        }
    }
    Outcome::new(
        problems.is_empty(),
        format!(
            "343 functions, both orders; cases {}/{}/{}/{}{}",
            cases[0],
            cases[1],
            cases[2],
            cases[3],
            failures(&problems)
        ),
    )
}

// Exhaustive family: every poset on at most five points up to isomorphism,
// every integer function with values at most 3.

const FAMILY_MAX_POINTS: usize = 5;
const FAMILY_MAX_VALUE: u64 = 3;

fn family_posets() -> &'static Vec<Below> {
    static POSETS: OnceLock<Vec<Below>> = OnceLock::new();
    POSETS.get_or_init(|| {
        (1..=FAMILY_MAX_POINTS)
            .flat_map(oracle::posets_up_to_iso)
            .collect()
    })
}

fn criterion_3() -> Outcome {
    let posets = family_posets();
    let results = par_map(posets, |below| {
        let n = below.len();
        let (poset, index) = oracle::embed(below);
        let mut checks = 0usize;
        let mut bad = None;
        let full = (1u32 << n) - 1;
        let domains: Vec<u32> = (0..n)
            .map(|y| oracle::upper_set(below, y))
            .chain([full])
            .collect();
        for f in oracle::functions(n, FAMILY_MAX_VALUE) {
            let cf = oracle::count_function(&poset, &index, &f);
            for &dom in &domains {
                let expected = oracle::brute_max_lower_bound(below, &f, dom);
                let lib_domain: Vec<usize> = oracle::ones(dom).map(|x| index[x]).collect();
                let got = max_monotonic_lower_bound(&cf, &lib_domain).unwrap();
                let ok = got.len() == lib_domain.len()
                    && oracle::ones(dom).all(|x| got[&index[x]] == expected[x]);
                checks += 1;
                if !ok && bad.is_none() {
                    bad = Some(format!("poset {below:?} f {f:?} domain {dom:#b}"));
                }
            }
        }
        (checks, bad)
    });
    let checks: usize = results.iter().map(|r| r.0).sum();
    let bad: Vec<String> = results.into_iter().filter_map(|r| r.1).collect();
    Outcome::new(
        bad.is_empty(),
        format!(
            "{} posets, {checks} (f, domain) pairs{}",
            posets.len(),
            failures(&bad[..bad.len().min(3)])
        ),
    )
}

/// Per-instance results of the decomposition oracle sweep, shared by
/// criteria 4 to 6.
#[derive(Default)]
struct Sweep {
    instances: usize,
    decompositions: usize,
    library_mismatch: Vec<String>,
    greedy_not_minimal: Vec<String>,
    /// Non-minimal greedy outputs on functions that are positive everywhere.
    greedy_not_minimal_full: Vec<String>,
    rigidity_broken: usize,
    bound_mismatch: usize,
    rigidity_example: Option<String>,
    bound_example: Option<String>,
    max_refined_bad: Vec<String>,
}

impl Sweep {
    fn merge(&mut self, other: Sweep) {
        self.instances += other.instances;
        self.decompositions += other.decompositions;
        self.library_mismatch.extend(other.library_mismatch);
        self.greedy_not_minimal.extend(other.greedy_not_minimal);
        self.greedy_not_minimal_full.extend(other.greedy_not_minimal_full);
        self.rigidity_broken += other.rigidity_broken;
        self.bound_mismatch += other.bound_mismatch;
        self.rigidity_example = self.rigidity_example.take().or(other.rigidity_example);
        self.bound_example = self.bound_example.take().or(other.bound_example);
        self.max_refined_bad.extend(other.max_refined_bad);
    }
}

fn sweep_instance(below: &[u32], f: &[u64], poset: &Arc<PatternPoset>, index: &[usize], s: &mut Sweep) {
    let label = || format!("poset {below:?} f {f:?}");
    let total: u64 = f.iter().sum();
    let cf = oracle::count_function(poset, index, f);
    let all = oracle::enumerate(below, f, total as usize);
    s.instances += 1;
    s.decompositions += all.len();

    let mut library: Vec<Decomp> = dialect_core::enumerate_integer_decompositions(&cf, total as usize)
        .unwrap()
        .iter()
        .map(|d| oracle::from_library(d, index))
        .collect();
    library.sort();
    let mut sorted = all.clone();
    sorted.sort();
    if library != sorted {
        s.library_mismatch.push(label());
    }

    let greedy_lib = decompose(&cf);
    let greedy = oracle::from_library(&greedy_lib, index);
    let greedy_ok = oracle::is_valid(below, f, &greedy)
        && all.contains(&greedy)
        && all
            .iter()
            .all(|e| *e == greedy || !oracle::refines(below, &greedy, e));
    if !greedy_ok {
        s.greedy_not_minimal.push(label());
        if f.iter().all(|&v| v > 0) {
            s.greedy_not_minimal_full.push(format!("{} greedy {greedy:?}", label()));
        }
    }

    let minimal = oracle::minimal(below, &all);
    let multisets: BTreeSet<Vec<usize>> = minimal.iter().map(|&i| oracle::roots(&all[i])).collect();
    if multisets.len() > 1 {
        s.rigidity_broken += 1;
        if s.rigidity_example.is_none() {
            s.rigidity_example = Some(format!("{} root multisets {multisets:?}", label()));
        }
    }
    let bound = dialect_count_lower_bound(&greedy_lib);
    let sizes: BTreeSet<usize> = multisets.iter().map(Vec::len).collect();
    if sizes.len() != 1 || !sizes.contains(&bound) {
        s.bound_mismatch += 1;
        if s.bound_example.is_none() {
            s.bound_example = Some(format!("{} bound {bound} vs sizes {sizes:?}", label()));
        }
    }

    let mr_lib = max_refined_decomposition(&cf).unwrap();
    let mr = oracle::from_library(&mr_lib, index);
    let mr_ok = mr.len() as u64 == total
        && mr_lib.reconstruct() == cf.values()
        && oracle::is_valid(below, f, &mr)
        && oracle::refines(below, &mr, &greedy)
        && all.iter().all(|e| oracle::refines(below, &mr, e));
    if !mr_ok {
        s.max_refined_bad.push(label());
    }
}

fn sweep() -> &'static (Sweep, Duration) {
    static SWEEP: OnceLock<(Sweep, Duration)> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let posets = family_posets();
        let parts = par_map(posets, |below| {
            let (poset, index) = oracle::embed(below);
            let mut s = Sweep::default();
            for f in oracle::functions(below.len(), FAMILY_MAX_VALUE) {
                sweep_instance(below, &f, &poset, &index, &mut s);
            }
            s
        });
        let mut total = Sweep::default();
        for p in parts {
            total.merge(p);
        }
        (total, start.elapsed())
    })
}

fn criterion_4() -> Outcome {
    let (s, elapsed) = sweep();
    let mut problems: Vec<String> = Vec::new();
    if let Some(x) = s.greedy_not_minimal.first() {
        problems.push(format!("{} non-minimal, e.g. {x}", s.greedy_not_minimal.len()));
    }
    if let Some(x) = s.greedy_not_minimal_full.first() {
        problems.push(format!(
            "{} of them with f positive everywhere, e.g. {x}",
            s.greedy_not_minimal_full.len()
        ));
    }
    if let Some(x) = s.library_mismatch.first() {
        problems.push(format!(
            "{} enumerator disagreements, e.g. {x}",
            s.library_mismatch.len()
        ));
    }
    if *elapsed >= Duration::from_secs(300) {
        problems.push(format!("sweep took {elapsed:?}"));
    }
    Outcome::new(
        problems.is_empty(),
        format!(
            "{} instances, {} decompositions, sweep {:.1?}{}",
            s.instances,
            s.decompositions,
            elapsed,
            failures(&problems)
        ),
    )
}

fn criterion_5() -> Outcome {
    let (s, _) = sweep();
    let mut detail = format!(
        "{} instances; root multisets differ in {}, bound differs in {}",
        s.instances, s.rigidity_broken, s.bound_mismatch
    );
    for example in [&s.rigidity_example, &s.bound_example].into_iter().flatten() {
        let _ = write!(detail, "; e.g. {example}");
    }
    Outcome::new(s.rigidity_broken == 0 && s.bound_mismatch == 0, detail)
}

fn criterion_6() -> Outcome {
    let (s, _) = sweep();
    let problems: Vec<String> = s.max_refined_bad.iter().take(3).cloned().collect();
    Outcome::new(
        s.max_refined_bad.is_empty(),
        format!(
            "{} instances{}",
            s.instances,
            failures(&problems)
        ),
    )
}

// Planted dialects.

const PLANTED_SPECS: usize = 50;
const PLANTED_FILES: u64 = 10_000;

struct Planted {
    spec: MixtureSpec,
    json: String,
    required: Vec<MessagePattern>,
}

/// 2 to 5 dialects over 6 to 12 messages. Required sets have 1 to 3
/// messages and are pairwise incomparable. Weights are whole percentages of
/// at least 5. Each dialect gets marginals in 0.05..=0.40 on up to five
/// other messages.
fn planted_spec(seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(6..=12);
    let k = rng.gen_range(2..=5);
    let names: Vec<String> = (0..m).map(|j| format!("msg{j}")).collect();
    let mut required: Vec<BTreeSet<usize>> = Vec::new();
    while required.len() < k {
        let size = rng.gen_range(1..=3);
        let set: BTreeSet<usize> = rand::seq::index::sample(&mut rng, m, size).into_iter().collect();
        if required.iter().all(|r| !r.is_subset(&set) && !set.is_subset(r)) {
            required.push(set);
        }
    }
    let mut weights = vec![5u32; k];
    for _ in 0..(100 - 5 * k as u32) {
        weights[rng.gen_range(0..k)] += 1;
    }
    let dialects: Vec<serde_json::Value> = required
        .iter()
        .zip(&weights)
        .map(|(r, &w)| {
            let mut others: Vec<usize> = (0..m).filter(|j| !r.contains(j)).collect();
            others.shuffle(&mut rng);
            let count = rng.gen_range(0..=5.min(others.len()));
            let marginals: serde_json::Map<String, serde_json::Value> = others[..count]
                .iter()
                .map(|&j| {
                    let p: u32 = rng.gen_range(5..=40);
                    (names[j].clone(), serde_json::from_str(&format!("0.{p:02}")).unwrap())
                })
                .collect();
            serde_json::json!({
                "required": r.iter().map(|&j| names[j].clone()).collect::<Vec<_>>(),
                "marginals": marginals,
                "weight": serde_json::from_str::<serde_json::Value>(&format!("0.{w:02}")).unwrap(),
            })
        })
        .collect();
    let json = serde_json::to_string(&serde_json::json!({
        "messages": names,
        "dialects": dialects,
    }))
    .unwrap();
    let spec = MixtureSpec::from_json_str(&json).unwrap();
    let mut required: Vec<MessagePattern> = spec.dialects().iter().map(|d| d.required().clone()).collect();
    required.sort();
    Planted {
        spec,
        json,
        required,
    }
}

fn planted() -> &'static Vec<Planted> {
    static PLANTED: OnceLock<Vec<Planted>> = OnceLock::new();
    PLANTED.get_or_init(|| (0..PLANTED_SPECS as u64).map(|i| planted_spec(1000 + i)).collect())
}

fn root_patterns<V: CountValue>(d: &MonotonicDecomposition<V>) -> Vec<MessagePattern> {
    let poset = d.source().poset();
    let mut roots: Vec<MessagePattern> = d.roots().into_iter().map(|r| poset.element(r).clone()).collect();
    roots.sort();
    roots
}

/// Some dialect puts mass on a pattern containing another dialect's
/// required set, so that pattern lies in the other dialect's upper set.
fn entangled(spec: &MixtureSpec) -> bool {
    let poset = support_poset(spec).unwrap();
    spec.dialects().iter().enumerate().any(|(a, da)| {
        poset.elements().iter().any(|x| {
            pattern_probability(da, x).unwrap() > Default::default()
                && spec
                    .dialects()
                    .iter()
                    .enumerate()
                    .any(|(b, db)| b != a && db.required().is_subset(x))
        })
    })
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let specs = planted();
    let results = par_map(specs, |p| {
        let poset = support_poset(&p.spec).unwrap();
        let f = expected_count_function(&p.spec, PLANTED_FILES, poset).unwrap();
        let exact = root_patterns(&decompose(&f)) == p.required;

        let matrix = synthesize_matrix(&p.spec, PLANTED_FILES as usize, 7);
        let (_, counts) = aggregate_counts(&matrix);
        let d = decompose(&counts);
        let mut terms: Vec<&MonotonicTerm<u64>> = d.terms().iter().collect();
        terms.sort_by_key(|t| std::cmp::Reverse(*t.root_count()));
        let poset = counts.poset();
        let mut top: Vec<MessagePattern> = terms
            .iter()
            .take(p.required.len())
            .map(|t| poset.element(t.root()).clone())
            .collect();
        top.sort();
        (exact, top == p.required, entangled(&p.spec))
    });
    let elapsed = start.elapsed();
    let exact_fail: Vec<usize> = (0..results.len()).filter(|&i| !results[i].0).collect();
    let sampled_hits = results.iter().filter(|r| r.1).count();
    let sampled_rate = sampled_hits as f64 / results.len() as f64;
    let pass = exact_fail.is_empty() && sampled_rate >= 0.95 && elapsed < Duration::from_secs(30);
    let mut detail = format!(
        "exact recovery {}/{}; sampled top-K {sampled_hits}/{} ({:.0}%); {elapsed:.1?}",
        results.len() - exact_fail.len(),
        results.len(),
        results.len(),
        100.0 * sampled_rate
    );
    let entangled_misses = exact_fail.iter().filter(|&&i| results[i].2).count();
    let entangled_specs = results.iter().filter(|r| r.2).count();
    let _ = write!(
        detail,
        "; {entangled_specs} specs put one dialect's mass in another's upper set, {entangled_misses} of the {} exact misses among them",
        exact_fail.len()
    );
    if let Some(&i) = exact_fail.first() {
        let _ = write!(detail, "; first exact miss: {}", specs[i].json);
    }
    Outcome::new(pass, detail)
}

// Consolidation.

fn harness_matrix(workers: usize) -> FileMessageMatrix {
    let dir = fixtures().join("harness");
    let config = HarnessConfig::load(&dir.join("config.json")).unwrap();
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir.join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    run_harness(&config, &files, workers).unwrap()
}

fn harness_matrices() -> &'static (FileMessageMatrix, FileMessageMatrix) {
    static M: OnceLock<(FileMessageMatrix, FileMessageMatrix)> = OnceLock::new();
    M.get_or_init(|| (harness_matrix(1), harness_matrix(4)))
}

fn criterion_8() -> Outcome {
    let mut corpora: Vec<(String, CountFunction<u64>)> = Vec::new();
    let csv_like = MixtureSpec::from_json_str(
        &std::fs::read_to_string(fixtures().join("csv_like_spec.json")).unwrap(),
    )
    .unwrap();
    for (n, seed) in [(500, 1), (3005, 2), (20_000, 3)] {
        let (_, f) = aggregate_counts(&synthesize_matrix(&csv_like, n, seed));
        corpora.push((format!("csv-like n={n}"), f));
    }
    for (i, p) in planted().iter().enumerate() {
        let (_, f) = aggregate_counts(&synthesize_matrix(&p.spec, 2000, i as u64));
        corpora.push((format!("planted #{i}"), f));
    }
    let (m, _) = harness_matrices();
    corpora.push(("harness fixture".into(), aggregate_counts(m).1));
    let (inverted, _) = invert_frequent_messages(m, 0.5).unwrap();
    corpora.push(("harness fixture inverted".into(), aggregate_counts(&inverted).1));
    let (_, example) = load_pattern_counts(&fixtures().join("diamond_counts.json")).unwrap();
    corpora.push(("diamond".into(), example));

    let mut bad = Vec::new();
    let mut lines = Vec::new();
    for (name, f) in &corpora {
        let d = decompose(f);
        for t in [1u64, 5, 25] {
            let dialects = d.terms().iter().filter(|x| *x.root_count() >= t).count();
            let patterns = f.values().iter().filter(|&&v| v >= t).count();
            if dialects > patterns {
                bad.push(format!("{name} t={t}: {dialects} > {patterns}"));
            }
            if name.starts_with("csv-like n=3005") {
                lines.push(format!("t={t} {dialects} vs {patterns}"));
            }
        }
    }
    Outcome::new(
        bad.is_empty(),
        format!(
            "{} corpora; csv-like n=3005: {}{}",
            corpora.len(),
            lines.join(", "),
            failures(&bad)
        ),
    )
}

// Harness.

fn read_expected(path: &Path) -> (Vec<String>, Vec<(String, Vec<bool>)>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').skip(1).map(str::to_owned).collect();
    let rows = lines
        .map(|l| {
            let mut cells = l.split(',');
            let file = cells.next().unwrap().to_owned();
            (file, cells.map(|c| c == "1").collect())
        })
        .collect();
    (header, rows)
}

fn matrix_as_rows(m: &FileMessageMatrix) -> (Vec<String>, Vec<(String, Vec<bool>)>) {
    let width = m.universe().len();
    let mut rows: Vec<(String, Vec<bool>)> = m
        .rows()
        .iter()
        .map(|r| {
            let base = Path::new(&r.file).file_name().unwrap().to_string_lossy().into_owned();
            (base, (0..width).map(|j| r.pattern.contains(j)).collect())
        })
        .collect();
    rows.sort();
    (m.universe().names().to_vec(), rows)
}

fn criterion_9() -> Outcome {
    let dir = fixtures().join("harness");
    let (m1, m4) = harness_matrices();
    let mut problems = Vec::new();
    if matrix_as_rows(m1) != read_expected(&dir.join("expected.csv")) {
        problems.push(format!("matrix differs: {:?}", matrix_as_rows(m1)));
    }
    if !m1.same_data(m4) {
        problems.push("workers 1 and 4 disagree".into());
    }
    let (inverted, names) = invert_frequent_messages(m1, 0.5).unwrap();
    if names != ["slow-done"] {
        problems.push(format!("inverted {names:?}"));
    }
    let logged = inverted.provenance().get("inverted").cloned();
    if logged != Some(serde_json::json!(["slow-done"])) {
        problems.push(format!("provenance log {logged:?}"));
    }
    if matrix_as_rows(&inverted) != read_expected(&dir.join("expected_inverted.csv")) {
        problems.push("inverted matrix differs".into());
    }
    let max_freq = inverted
        .message_frequencies()
        .into_iter()
        .fold(0.0, f64::max);
    if max_freq > 0.5 {
        problems.push(format!("frequency {max_freq} after inversion"));
    }
    let failures_logged = m1
        .provenance()
        .get("execution_failures")
        .and_then(|v| v.as_array().map(Vec::len))
        .unwrap_or(0);
    Outcome::new(
        problems.is_empty(),
        format!(
            "{} files x {} messages; {failures_logged} execution failures logged; max frequency after inversion {max_freq}{}",
            m1.rows().len(),
            m1.universe().len(),
            failures(&problems)
        ),
    )
}

// Pipeline identity.

fn dialects_cli(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_dialects"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "dialects {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let spec_path = fixtures().join("csv_like_spec.json");
    let spec = MixtureSpec::from_json_str(&std::fs::read_to_string(&spec_path).unwrap()).unwrap();
    let mut problems = Vec::new();
    let mut checked = 0;
    for (seed, n) in [(0u64, 3005usize), (11, 10_000)] {
        let (_, f) = aggregate_counts(&synthesize_matrix(&spec, n, seed));
        let d = decompose(&f);
        let report = decompose_report(&d, DEFAULT_MIN_COUNT, SortOrder::Discovery, &Annotations::default());
        let library = report.to_json();
        for (name, extra) in [("m.json", None), ("m.csv", None), ("counts.json", Some("--counts"))] {
            let path = tmp.path().join(format!("{seed}-{name}"));
            let path_s = path.to_str().unwrap();
            let seed_s = seed.to_string();
            let n_s = n.to_string();
            let mut args = vec![
                "synth",
                "--input",
                spec_path.to_str().unwrap(),
                "--n-files",
                &n_s,
                "--seed",
                &seed_s,
                "--output",
                path_s,
            ];
            args.extend(extra);
            dialects_cli(&args);
            let cli = dialects_cli(&["decompose", "--input", path_s, "--format", "json"]);
            checked += 1;
            if cli.as_bytes() != library.as_bytes() {
                problems.push(format!("seed {seed} via {name}"));
            }
        }
    }
    Outcome::new(
        problems.is_empty(),
        format!("{checked} CLI runs byte-identical to the library{}", failures(&problems)),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("diamond with a shared top", criterion_1),
        ("diamond case table", criterion_2),
        ("maximal lower bound oracle", criterion_3),
        ("greedy output is minimal", criterion_4),
        ("support rigidity and count bound", criterion_5),
        ("maximal refinement", criterion_6),
        ("planted dialect recovery", criterion_7),
        ("consolidation inequality", criterion_8),
        ("harness fixture", criterion_9),
        ("CLI pipeline identity", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name} ({:.2?}): {}",
            k + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            start.elapsed(),
            outcome.detail
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
