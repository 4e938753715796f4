//! Randomized comparison of the index against the brute-force oracle, with
//! shrinking of failing cases.

use std::fmt;

use crate::corpus::{self, Shape};
use crate::error::Result;
use crate::index::{IndexConfig, RangeIndex};
use crate::majority::{Dispatch, VerifyMode};
use crate::minority::Strategy;
use crate::oracle;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryKind {
    Majority,
    Minority,
    Mode,
}

impl QueryKind {
    pub fn name(self) -> &'static str {
        match self {
            QueryKind::Majority => "majority",
            QueryKind::Minority => "minority",
            QueryKind::Mode => "mode",
        }
    }
}

/// A query whose answer disagreed with the oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub kind: QueryKind,
    pub symbols: Vec<u32>,
    pub i: usize,
    pub j: usize,
    pub tau: f64,
    pub expected: String,
    pub got: String,
    pub config: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} query mismatch", self.kind.name())?;
        writeln!(f, "  config:   {}", self.config)?;
        writeln!(f, "  sequence: {:?}", self.symbols)?;
        if self.kind == QueryKind::Mode {
            writeln!(f, "  range:    i={} j={}", self.i, self.j)?;
        } else {
            writeln!(f, "  range:    i={} j={} tau={}", self.i, self.j, self.tau)?;
        }
        writeln!(f, "  expected: {}", self.expected)?;
        write!(f, "  got:      {}", self.got)
    }
}

/// Runs one query against the index and the oracle. `raw` is the sequence
/// the index was built from.
pub fn check_query(
    idx: &RangeIndex,
    raw: &[u32],
    kind: QueryKind,
    i: usize,
    j: usize,
    tau: f64,
) -> Result<Option<Mismatch>> {
    let (expected, got) = match kind {
        QueryKind::Majority => {
            let want = oracle::majorities(raw, i, j, tau)?;
            let have = idx.majorities(i, j, tau)?.value;
            if want == have {
                return Ok(None);
            }
            (format!("{want:?}"), format!("{have:?}"))
        }
        QueryKind::Minority => {
            let all = oracle::minorities(raw, i, j, tau)?;
            let have = idx.minority(i, j, tau)?.value;
            let ok = match have {
                None => all.is_empty(),
                Some(x) => all.contains(&x),
            };
            if ok {
                return Ok(None);
            }
            (format!("one of {all:?}"), format!("{have:?}"))
        }
        QueryKind::Mode => {
            let want = oracle::mode(raw, i, j)?;
            let ans = idx.mode(i, j)?;
            let len = (j + 1 - i) as f64;
            let bound = (len / want.1 as f64).log2().ceil() as usize + 1;
            if ans.value == want && ans.stats.iterations <= bound {
                return Ok(None);
            }
            (
                format!("{want:?} within {bound} iterations"),
                format!("{:?} after {} iterations", ans.value, ans.stats.iterations),
            )
        }
    };
    Ok(Some(Mismatch {
        kind,
        symbols: raw.to_vec(),
        i,
        j,
        tau,
        expected,
        got,
        config: idx.config().describe(),
    }))
}

/// Index configurations the suite cycles through.
pub fn config_variants() -> Vec<IndexConfig> {
    let base = IndexConfig::default();
    let mut listing = base.with_verify(VerifyMode::CheckLemma);
    listing.minority.strategy = Strategy::Listing;
    let mut small_chunks = base.with_verify(VerifyMode::CheckLemma).with_dispatch(Dispatch::ForceFlagged);
    small_chunks.majority.chunk_len = 4;
    let mut multiary = base.with_trade(8);
    multiary.sequence.arity_bits = 3;
    multiary.sequence.compressed = true;
    vec![
        base,
        base.with_verify(VerifyMode::CheckLemma),
        base.with_dispatch(Dispatch::ForceFlagged),
        base.with_dispatch(Dispatch::ForceSequential),
        small_chunks,
        listing,
        multiary,
        IndexConfig::compact(),
    ]
}

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub cases: usize,
    pub queries: usize,
    pub failures: Vec<Mismatch>,
    /// Build-time or audit failures, with the case that caused them.
    pub errors: Vec<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.errors.is_empty()
    }
}

const SIGMAS: [u32; 5] = [2, 4, 16, 256, 1024];

/// `cases` random strings, each indexed under one configuration variant and
/// queried `queries` times per kind. Stops collecting after the first
/// failure of each case.
pub fn run_suite(cases: usize, queries: usize, seed: u64) -> SuiteReport {
    let mut rng = corpus::rng(seed);
    let variants = config_variants();
    let mut report = SuiteReport::default();
    for c in 0..cases {
        let n = rand::Rng::random_range(&mut rng, 1..=2048usize);
        let sigma = SIGMAS[c % SIGMAS.len()];
        let shape = if c % 2 == 0 { Shape::Uniform } else { Shape::Zipf(1.1) };
        let raw = corpus::sequence(&mut rng, n, sigma, shape).expect("valid corpus parameters");
        let config = variants[c % variants.len()];
        report.cases += 1;
        let idx = match RangeIndex::build(&raw, config) {
            Ok(idx) => idx,
            Err(e) => {
                report.errors.push(format!("case {c}: build failed: {e}"));
                continue;
            }
        };
        let grid = corpus::tau_grid(idx.sigma());
        'queries: for q in 0..queries {
            let (i, j) = corpus::range(&mut rng, n);
            let tau = grid[q % grid.len()];
            for kind in [QueryKind::Majority, QueryKind::Minority, QueryKind::Mode] {
                report.queries += 1;
                match check_query(&idx, &raw, kind, i, j, tau) {
                    Ok(None) => {}
                    Ok(Some(m)) => {
                        let small = minimize(&m, |s| RangeIndex::build(s, config));
                        report.failures.push(small);
                        break 'queries;
                    }
                    Err(e) => {
                        report.errors.push(format!("case {c}: query ({i},{j},{tau}) failed: {e}"));
                        break 'queries;
                    }
                }
            }
        }
    }
    report
}

fn still_fails(m: &Mismatch, build: &impl Fn(&[u32]) -> Result<RangeIndex>) -> Option<Mismatch> {
    let idx = build(&m.symbols).ok()?;
    check_query(&idx, &m.symbols, m.kind, m.i, m.j, m.tau).ok()?
}

/// Shrinks a failing case: crops the sequence to the queried range, then
/// deletes ever smaller pieces while the failure persists.
pub fn minimize(m: &Mismatch, build: impl Fn(&[u32]) -> Result<RangeIndex>) -> Mismatch {
    let mut best = m.clone();
    let cropped = Mismatch {
        symbols: m.symbols[m.i - 1..m.j].to_vec(),
        i: 1,
        j: m.j + 1 - m.i,
        ..m.clone()
    };
    if let Some(f) = still_fails(&cropped, &build) {
        best = f;
    }
    let mut budget = 2000;
    let mut piece = best.symbols.len() / 2;
    while piece >= 1 && budget > 0 {
        let mut at = 0;
        let mut shrunk = false;
        while at + piece <= best.symbols.len() && best.symbols.len() > 1 && budget > 0 {
            budget -= 1;
            let mut s = best.symbols.clone();
            s.drain(at..at + piece);
            let mut cand = Mismatch {
                symbols: s,
                ..best.clone()
            };
            cand.j = cand.j.min(cand.symbols.len());
            cand.i = cand.i.min(cand.j);
            match still_fails(&cand, &build) {
                Some(f) => {
                    best = f;
                    shrunk = true;
                }
                None => at += piece,
            }
        }
        if !shrunk {
            piece /= 2;
        }
    }
    best
}

/// Searches ranges of length in `[2^b, 2^(b+1))` containing position `k`
/// (1-based), at thresholds whose flag family is `t`, for a majority query
/// where `idx` and `reference` disagree. Returns it checked against the
/// oracle. At most 64 lengths and 64 starts per length are tried.
pub fn probe_around(
    idx: &RangeIndex,
    reference: &RangeIndex,
    raw: &[u32],
    k: usize,
    (t, b): (u32, u32),
) -> Option<Mismatch> {
    let n = raw.len();
    let lo = 1usize << b;
    let hi = ((1usize << (b + 1)) - 1).min(n);
    if lo > hi {
        return None;
    }
    let base = 0.5f64.powi(t as i32);
    let taus = [base, (1.5 * base).min(1.0)];
    for len in (lo..=hi).step_by((hi - lo) / 64 + 1) {
        let first = k.saturating_sub(len - 1).max(1);
        let last = k.min(n + 1 - len);
        if first > last {
            continue;
        }
        for i in (first..=last).step_by((last - first) / 64 + 1) {
            let j = i + len - 1;
            for &tau in &taus {
                let got = idx.majorities(i, j, tau).ok().map(|a| a.value);
                if got != reference.majorities(i, j, tau).ok().map(|a| a.value) {
                    if let Ok(Some(m)) = check_query(idx, raw, QueryKind::Majority, i, j, tau) {
                        return Some(m);
                    }
                }
            }
        }
    }
    None
}
