//! Acceptance checks. Each criterion prints one PASS/FAIL line; the test
//! fails if any criterion does.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the report.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use rfq::corpus::{self, CorpusRng, Shape};
use rfq::listing::ListingIndex;
use rfq::majority::{Dispatch, VerifyMode};
use rfq::minority::Strategy;
use rfq::oracle;
use rfq::persist::Persist;
use rfq::stats::{Counted, QueryStats};
use rfq::swar::{Band, SwarParams};
use rfq::threshold::inverse_ceil;
use rfq::{IndexConfig, RangeIndex};

const SIGMAS: [u32; 5] = [2, 4, 16, 256, 1024];

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        let line = format!("[{}] {id}. {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((ok, line));
    }
}

/// Candidate and work bounds for one majority or minority query. Minority
/// queries verify at most one candidate beyond the `ceil(1/tau)` majorities
/// they can skip.
fn within_work_bound(minority: bool, stats: &QueryStats, tau: f64, sigma: u32, trade: usize) -> bool {
    let inv = inverse_ceil(tau);
    let extra = if tau * (sigma as f64) < 1.0 { sigma as usize } else { 0 };
    let candidates = if minority { inv + 1 } else { 64 * inv };
    stats.candidates <= candidates + extra && stats.sequence_ops() <= 64 * inv * trade + 2 * extra
}

#[derive(Default)]
struct CorpusTally {
    majority_cases: [usize; 2],
    majority_bad: Vec<String>,
    minority_cases: [usize; 2],
    minority_bad: Vec<String>,
    mode_cases: usize,
    mode_bad: Vec<String>,
    work_cases: usize,
    work_bad: Vec<String>,
    majority_secs: f64,
}

fn config_for(rng: &mut CorpusRng, verify: VerifyMode, strategy: Strategy) -> IndexConfig {
    let mut c = IndexConfig::default().with_verify(verify);
    c.minority.strategy = strategy;
    c.minority.verify = verify;
    if verify == VerifyMode::CheckLemma && rng.random_bool(0.5) {
        // small chunks so sampled successor search is exercised
        c.majority.chunk_len = 8;
    }
    c
}

/// Criteria 1 to 4 over one randomized corpus: each string is indexed under
/// both verify modes (with the two minority strategies alternating) and
/// queried at every threshold of the grid.
fn randomized_corpus(strings: usize, seed: u64) -> CorpusTally {
    let mut rng = corpus::rng(seed);
    let mut t = CorpusTally::default();
    for s in 0..strings {
        let n = rng.random_range(1..=2048usize);
        let sigma = SIGMAS[s % SIGMAS.len()];
        let shape = if (s / SIGMAS.len()).is_multiple_of(2) { Shape::Uniform } else { Shape::Zipf(1.1) };
        let raw = corpus::sequence(&mut rng, n, sigma, shape).unwrap();
        let queries: Vec<(usize, usize)> = (0..3).map(|_| corpus::range(&mut rng, n)).collect();
        for (v, verify) in [VerifyMode::Rank, VerifyMode::CheckLemma].into_iter().enumerate() {
            let strategy = if (s + v) % 2 == 0 { Strategy::Flags } else { Strategy::Listing };
            let config = config_for(&mut rng, verify, strategy);
            let idx = RangeIndex::build(&raw, config).unwrap();
            let grid = corpus::tau_grid(idx.sigma());
            let trade = config.majority.trade;
            for &(i, j) in &queries {
                for &tau in &grid {
                    let case = format!("n={n} sigma={sigma} {} ({i},{j}) tau={tau} {}", shape.name(), config.describe());
                    let start = Instant::now();
                    let got = idx.majorities(i, j, tau).unwrap();
                    t.majority_secs += start.elapsed().as_secs_f64();
                    t.majority_cases[v] += 1;
                    if got.value != oracle::majorities(&raw, i, j, tau).unwrap() {
                        t.majority_bad.push(case.clone());
                    }
                    let m = idx.minority(i, j, tau).unwrap();
                    let all = oracle::minorities(&raw, i, j, tau).unwrap();
                    t.minority_cases[strategy as usize] += 1;
                    let ok = match m.value {
                        None => all.is_empty(),
                        Some(x) => all.contains(&x),
                    };
                    if !ok {
                        t.minority_bad.push(case.clone());
                    }
                    t.work_cases += 2;
                    for (kind, stats) in [("majority", &got.stats), ("minority", &m.stats)] {
                        if !within_work_bound(kind == "minority", stats, tau, idx.sigma(), trade) {
                            t.work_bad.push(format!("{kind} {case}: {stats:?}"));
                        }
                    }
                }
                let want = oracle::mode(&raw, i, j).unwrap();
                let got = idx.mode(i, j).unwrap();
                let bound = ((j + 1 - i) as f64 / want.1 as f64).log2().ceil() as usize + 1;
                t.mode_cases += 1;
                if got.value != want || got.stats.iterations > bound {
                    t.mode_bad.push(format!(
                        "n={n} ({i},{j}): want {want:?} within {bound}, got {:?} after {}",
                        got.value, got.stats.iterations
                    ));
                }
            }
        }
    }
    t
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Mean sequence operations of majority queries per threshold on a large
/// skewed corpus.
fn work_scaling() -> (f64, Vec<(f64, f64)>) {
    let mut rng = corpus::rng(31);
    let n = 1_000_000;
    let raw = corpus::sequence(&mut rng, n, 1024, Shape::Zipf(1.1)).unwrap();
    let idx = RangeIndex::build(&raw, IndexConfig::default()).unwrap();
    let queries: Vec<(usize, usize)> = (0..400)
        .map(|_| {
            let len = rng.random_range(n / 8..=n / 2);
            corpus::range_of_len(&mut rng, n, len)
        })
        .collect();
    let mut points = Vec::new();
    for e in 1..=8 {
        let tau = 0.5f64.powi(e);
        let total: usize = queries
            .iter()
            .map(|&(i, j)| idx.majorities(i, j, tau).unwrap().stats.sequence_ops())
            .sum();
        points.push((1.0 / tau, total as f64 / queries.len() as f64));
    }
    (loglog_slope(&points), points)
}

fn listing_check() -> (usize, Vec<String>) {
    let mut rng = corpus::rng(5);
    let mut bad = Vec::new();
    let mut checks = 0;
    for s in 0..100 {
        let n = rng.random_range(1..=3000usize);
        let sigma = SIGMAS[s % SIGMAS.len()];
        let raw = corpus::sequence(&mut rng, n, sigma, Shape::Zipf(1.1)).unwrap();
        let idx = RangeIndex::build(&raw, IndexConfig::default()).unwrap();
        let dense = idx.sequence().to_vec();
        let queries: Vec<(usize, usize)> = (0..20).map(|_| corpus::range(&mut rng, n)).collect();
        let full = ListingIndex::build(idx.sequence(), &dense, 1).unwrap();
        for g in [1, 2, 8, 64] {
            let sparse = ListingIndex::build(idx.sequence(), &dense, g).unwrap();
            for &(i, j) in &queries {
                checks += 1;
                let mut ops = Counted::new(idx.sequence());
                let want: BTreeSet<(u32, usize)> = full.list(&mut ops, i, j, usize::MAX).unwrap().into_iter().collect();
                let mut ops = Counted::new(idx.sequence());
                let got: BTreeSet<(u32, usize)> = sparse.list(&mut ops, i, j, usize::MAX).unwrap().into_iter().collect();
                let probes = ops.stats.probes;
                if got != want || (g > 1 && probes > g * (2 * got.len() + 2)) {
                    bad.push(format!("string {s} g={g} ({i},{j}): {} vs {} distinct, {probes} probes", got.len(), want.len()));
                }
            }
        }
    }
    (checks, bad)
}

fn scalar_counts(symbols: &[u8], sigma: u32) -> Vec<u64> {
    let mut c = vec![0u64; sigma as usize];
    for &s in symbols {
        c[s as usize] += 1;
    }
    c
}

fn swar_agrees(p: &SwarParams, symbols: &[u8], y: u64) -> bool {
    let counts = scalar_counts(symbols, p.sigma());
    let word = p.count(symbols).unwrap();
    if p.counts(&word) != counts {
        return false;
    }
    let (high, low) = p.threshold_extract(&word, y, Band::Both).unwrap();
    let want_high: Vec<u32> = (0..p.sigma()).filter(|&a| counts[a as usize] >= y).collect();
    let want_low: Vec<u32> = (0..p.sigma()).filter(|&a| (1..y).contains(&counts[a as usize])).collect();
    high == want_high && low == want_low
}

fn swar_check() -> (usize, Vec<String>) {
    let mut bad = Vec::new();
    let mut cases = 0;
    for sigma in [2u32, 4] {
        let p = SwarParams::new(sigma).unwrap();
        let k = p.chunk_len();
        // every chunk content of every length up to a full chunk
        for len in 0..=k {
            for code in 0..(sigma as usize).pow(len as u32) {
                let mut c = code;
                let chunk: Vec<u8> = (0..len)
                    .map(|_| {
                        let s = (c % sigma as usize) as u8;
                        c /= sigma as usize;
                        s
                    })
                    .collect();
                for y in 1..=p.capacity() as u64 + 1 {
                    cases += 1;
                    if !swar_agrees(&p, &chunk, y) {
                        bad.push(format!("sigma'={sigma} chunk {chunk:?} y={y}"));
                    }
                }
            }
        }
    }
    let mut rng = corpus::rng(6);
    for sigma in [8u32, 16] {
        let p = SwarParams::new(sigma).unwrap();
        for _ in 0..100_000 {
            let len = rng.random_range(0..=p.capacity());
            let skew = rng.random_range(1..=sigma);
            let symbols: Vec<u8> = (0..len).map(|_| rng.random_range(0..skew) as u8).collect();
            let y = rng.random_range(1..=p.capacity() as u64 + 1);
            cases += 1;
            if !swar_agrees(&p, &symbols, y) {
                bad.push(format!("sigma'={sigma} len={len} y={y}"));
            }
        }
    }
    (cases, bad)
}

fn serialization_check() -> (usize, Vec<String>) {
    let mut rng = corpus::rng(8);
    let mut bad = Vec::new();
    let mut queries = 0;
    let variants = rfq::verify::config_variants();
    for c in 0..50 {
        let n = rng.random_range(1..=4000usize);
        let sigma = SIGMAS[c % SIGMAS.len()];
        let raw = corpus::sequence(&mut rng, n, sigma, Shape::Zipf(1.1)).unwrap();
        let idx = RangeIndex::build(&raw, variants[c % variants.len()]).unwrap();
        let bytes = idx.to_bytes();
        let back = RangeIndex::from_bytes(&bytes).unwrap();
        if back.to_bytes() != bytes {
            bad.push(format!("corpus {c}: bytes differ after reload"));
            continue;
        }
        let grid = corpus::tau_grid(idx.sigma());
        for q in 0..100 {
            queries += 1;
            let (i, j) = corpus::range(&mut rng, n);
            let tau = grid[q % grid.len()];
            let same = idx.majorities(i, j, tau).unwrap().value == back.majorities(i, j, tau).unwrap().value
                && idx.minority(i, j, tau).unwrap().value == back.minority(i, j, tau).unwrap().value
                && idx.mode(i, j).unwrap().value == back.mode(i, j).unwrap().value;
            if !same {
                bad.push(format!("corpus {c} query ({i},{j},{tau})"));
            }
        }
    }
    (queries, bad)
}

/// A range where symbol `x` occurs exactly `tau * len` times.
fn boundary_check() -> (usize, Vec<String>) {
    let mut rng = corpus::rng(9);
    let mut bad = Vec::new();
    let configs = [
        IndexConfig::default(),
        IndexConfig::default().with_verify(VerifyMode::CheckLemma),
        IndexConfig::default().with_dispatch(Dispatch::ForceFlagged),
        IndexConfig::default().with_dispatch(Dispatch::ForceSequential),
    ];
    for c in 0..1000 {
        let (len, occ) = if c % 2 == 0 {
            // tau = k / d with d a power of two, exact in binary
            let d = 1usize << rng.random_range(1..=10);
            let len = d * rng.random_range(1..=1024 / d);
            (len, len / d * rng.random_range(1..d))
        } else {
            let len = rng.random_range(2..=1024usize);
            (len, rng.random_range(1..len))
        };
        let tau = occ as f64 / len as f64;
        let x = 1u32;
        let lonely = occ * 2 < len && c % 3 == 0;
        let mut range: Vec<u32> = vec![x; occ];
        while range.len() < len {
            range.push(if lonely { 2 } else { rng.random_range(2..=6) });
        }
        range.shuffle(&mut rng);
        let pre = rng.random_range(0..50usize);
        let post = rng.random_range(0..50usize);
        let mut raw: Vec<u32> = (0..pre).map(|_| rng.random_range(1..=6)).collect();
        raw.extend(&range);
        raw.extend((0..post).map(|_| rng.random_range(1..=6u32)));
        let (i, j) = (pre + 1, pre + len);
        let idx = RangeIndex::build(&raw, configs[c % configs.len()]).unwrap();
        let maj = idx.majorities(i, j, tau).unwrap().value;
        let minorities = oracle::minorities(&raw, i, j, tau).unwrap();
        let got = idx.minority(i, j, tau).unwrap().value;
        let fine = !maj.iter().any(|&(a, _)| a == x)
            && maj == oracle::majorities(&raw, i, j, tau).unwrap()
            && minorities.contains(&(x, occ))
            && got.is_some_and(|m| minorities.contains(&m))
            && (!lonely || got == Some((x, occ)));
        if !fine {
            bad.push(format!("len={len} occ={occ} tau={tau}: majorities {maj:?}, minority {got:?}"));
        }
    }
    (1000, bad)
}

fn space_check() -> (bool, String) {
    let mut rng = corpus::rng(7);
    let n = 1_000_000;
    let raw = corpus::sequence(&mut rng, n, 256, Shape::Zipf(1.3)).unwrap();
    let compact = RangeIndex::build(&raw, IndexConfig::compact()).unwrap().space();
    let mut plain_config = IndexConfig::compact();
    plain_config.sequence.compressed = false;
    let plain = RangeIndex::build(&raw, plain_config).unwrap().space();
    let envelope_c = 3.0 * compact.entropy_bits + (1u64 << 20) as f64;
    let envelope_p = 1.5 * plain.plain_bits as f64 + (1u64 << 20) as f64;
    let ok = (compact.total as f64) <= envelope_c && (plain.total as f64) <= envelope_p;
    (
        ok,
        format!(
            "compressed {} bits = {:.3} x nH0 (limit {:.0}); plain {} bits = {:.3} x n*ceil(lg sigma) (limit {:.0})",
            compact.total,
            compact.total as f64 / compact.entropy_bits,
            envelope_c,
            plain.total,
            plain.total as f64 / plain.plain_bits as f64,
            envelope_p
        ),
    )
}

fn first(bad: &[String]) -> String {
    bad.first().map(|b| format!("; first: {b}")).unwrap_or_default()
}

#[test]
fn acceptance() {
    let mut r = Report { lines: Vec::new() };

    let start = Instant::now();
    let t = randomized_corpus(380, 1);
    let wall = start.elapsed().as_secs_f64();
    let cases = t.majority_cases[0] + t.majority_cases[1];
    r.record(
        1,
        "majorities match oracle",
        t.majority_bad.is_empty() && cases >= 15_000 && t.majority_cases.iter().all(|&c| c > 0) && wall < 60.0,
        format!(
            "{cases} cases (rank {}, check {}), {} mismatches, {:.2}s in queries, {wall:.1}s corpus total{}",
            t.majority_cases[0],
            t.majority_cases[1],
            t.majority_bad.len(),
            t.majority_secs,
            first(&t.majority_bad)
        ),
    );
    r.record(
        2,
        "minorities valid",
        t.minority_bad.is_empty() && t.minority_cases.iter().all(|&c| c > 0),
        format!(
            "{} cases (listing {}, flags {}), {} invalid{}",
            t.minority_cases[0] + t.minority_cases[1],
            t.minority_cases[Strategy::Listing as usize],
            t.minority_cases[Strategy::Flags as usize],
            t.minority_bad.len(),
            first(&t.minority_bad)
        ),
    );

    let (slope, points) = work_scaling();
    let slope_ok = (slope - 1.0).abs() <= 0.15;
    let shown: Vec<String> = points.iter().map(|(x, y)| format!("{x:.0}:{y:.0}")).collect();
    r.record(
        3,
        "candidate and work bounds",
        t.work_bad.is_empty() && slope_ok,
        format!(
            "{} queries, {} over bound; log-log slope {slope:.3} over 1/tau:ops [{}]{}",
            t.work_cases,
            t.work_bad.len(),
            shown.join(" "),
            first(&t.work_bad)
        ),
    );
    r.record(
        4,
        "mode matches oracle within iteration bound",
        t.mode_bad.is_empty(),
        format!("{} queries, {} failures{}", t.mode_cases, t.mode_bad.len(), first(&t.mode_bad)),
    );

    let (checks, bad) = listing_check();
    r.record(
        5,
        "sparsified listing",
        bad.is_empty(),
        format!("{checks} range listings over g in {{1,2,8,64}}, {} failures{}", bad.len(), first(&bad)),
    );

    let (cases, bad) = swar_check();
    r.record(6, "word-parallel counting", bad.is_empty(), format!("{cases} cases, {} failures{}", bad.len(), first(&bad)));

    let (ok, detail) = space_check();
    r.record(7, "space envelope", ok, detail);

    let (queries, bad) = serialization_check();
    r.record(
        8,
        "serialization round trip",
        bad.is_empty(),
        format!("50 corpora, {queries} queries, {} failures{}", bad.len(), first(&bad)),
    );

    let (cases, bad) = boundary_check();
    r.record(
        9,
        "boundary strictness",
        bad.is_empty(),
        format!("{cases} constructed cases, {} failures{}", bad.len(), first(&bad)),
    );

    let failed: Vec<&String> = r.lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "failed criteria:\n{failed:#?}");
}
