//! Range tau-majority queries and adaptive range mode.
//!
//! For every threshold level `t` and range scale `b` the index keeps a flag
//! bitvector marking, in each block of `2^(b-1)` positions, the leftmost and
//! rightmost occurrence of every symbol that occurs at least `2^(b-t)` times
//! within distance `2^(b+1)`. Any majority of a range of length in
//! `[2^b, 2^(b+1))` has a flagged occurrence inside the range, so the flags
//! yield a short candidate list that is then verified.
//!
//! Verification either counts each candidate with two ranks, or uses the
//! one-select check on the leftmost occurrence in the range. Finding that
//! leftmost occurrence works within chunks of `chunk_len` consecutive
//! occurrences of a symbol. A second flag family marks every
//! `chunk_len`-th occurrence near enough to a dense window, and colored
//! listing over those samples covers candidates whose chunk starts inside the
//! range.
//!
//! Short ranges are scanned directly.

use std::collections::{BTreeMap, HashSet};

use crate::bits::{BitStore, BitVector, IntVector, RmqIndex};
use crate::error::{Error, Result};
use crate::listing::{list_below, ListingIndex};
use crate::occurrences::{window, Occurrences};
use crate::persist::{Persist, Reader, Writer};
use crate::stats::{Counted, QueryPath};
use crate::swar::{Band, SwarParams};
use crate::threshold::RangeParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyMode {
    /// Count every candidate with two ranks.
    Rank,
    /// Partial rank plus one select on the leftmost occurrence.
    CheckLemma,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dispatch {
    Auto,
    /// Scan every range that is not handled exhaustively.
    ForceSequential,
    /// Use flags whenever a family exists for the range, however short.
    ForceFlagged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MajorityConfig {
    /// Occurrences per chunk for successor search and sampling.
    pub chunk_len: usize,
    /// Time/space trade `g`: short-range cutoff and listing block length.
    pub trade: usize,
    pub verify: VerifyMode,
    pub dispatch: Dispatch,
}

impl Default for MajorityConfig {
    fn default() -> Self {
        Self {
            chunk_len: 1024,
            trade: 1,
            verify: VerifyMode::Rank,
            dispatch: Dispatch::Auto,
        }
    }
}

impl MajorityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_len == 0 {
            return Err(Error::Config("chunk length must be at least 1".into()));
        }
        if self.trade == 0 {
            return Err(Error::Config("trade parameter g must be at least 1".into()));
        }
        Ok(())
    }

    /// `ceil(lg g)`.
    pub fn lg_trade(&self) -> u32 {
        self.trade.next_power_of_two().trailing_zeros()
    }
}

/// Sampled occurrences and the listing structure over them.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Samples {
    flags: BitStore,
    /// Previous marked sample of the same symbol, as a 1-based index into
    /// the marked samples, or 0.
    prev: IntVector,
    rmq: RmqIndex,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Family {
    flags: BitStore,
    samples: Option<Samples>,
}

/// Result of the one-select check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub majority: bool,
    /// Rank of the checked occurrence among all occurrences of its symbol.
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MajorityIndex {
    config: MajorityConfig,
    n: usize,
    sigma: u32,
    families: BTreeMap<(u32, u32), Family>,
    warnings: Vec<String>,
    swar: Option<SwarParams>,
}

fn ceil_lg(x: u32) -> u32 {
    if x <= 1 {
        0
    } else {
        (x - 1).ilog2() + 1
    }
}

/// Doubly linked list over the offsets `0..len`.
struct PosList {
    next: Vec<u32>,
    prev: Vec<u32>,
}

impl PosList {
    /// Offsets are stored shifted by one; index 0 is the sentinel.
    fn new(len: usize) -> Self {
        let next = (0..=len as u32).map(|x| if x as usize == len { 0 } else { x + 1 }).collect();
        let prev = (0..=len as u32).map(|x| if x == 0 { len as u32 } else { x - 1 }).collect();
        Self { next, prev }
    }

    fn head(&self) -> Option<usize> {
        match self.next[0] {
            0 => None,
            x => Some(x as usize - 1),
        }
    }

    fn after(&self, off: usize) -> Option<usize> {
        match self.next[off + 1] {
            0 => None,
            x => Some(x as usize - 1),
        }
    }

    fn remove(&mut self, off: usize) {
        let x = off + 1;
        let (p, n) = (self.prev[x], self.next[x]);
        self.next[p as usize] = n;
        self.prev[n as usize] = p;
    }
}

/// Smallest rank `x` in `(lo, hi]` with `select(a, x) >= i`, given that
/// `select(a, hi) = hi_pos >= i` and that rank `lo` is before `i`. Gallops
/// back from `hi`, then bisects.
fn successor_between(
    ops: &mut Counted<'_>,
    a: u32,
    mut lo: usize,
    mut hi: usize,
    mut hi_pos: usize,
    i: usize,
) -> (usize, usize) {
    let mut step = 1;
    while hi - lo > 1 {
        let probe = hi.saturating_sub(step).max(lo + 1);
        let p = ops.select(a, probe).unwrap();
        if p >= i {
            hi = probe;
            hi_pos = p;
            step *= 2;
        } else {
            lo = probe;
            break;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let p = ops.select(a, mid).unwrap();
        if p >= i {
            hi = mid;
            hi_pos = p;
        } else {
            lo = mid;
        }
    }
    (hi, hi_pos)
}

/// Leftmost occurrence of `a` at or after `i` inside the chunk holding
/// the occurrence of rank `r` at position `pos`. `None` when an occurrence
/// before the chunk already lies at or after `i`, or when the chunk ends
/// before `i`.
fn successor_in_chunk(
    ops: &mut Counted<'_>,
    chunk_len: usize,
    a: u32,
    r: usize,
    pos: usize,
    i: usize,
) -> Option<(usize, usize)> {
    let q = r.div_ceil(chunk_len);
    let lo = (q - 1) * chunk_len;
    if lo > 0 && ops.select(a, lo).unwrap() >= i {
        return None;
    }
    if pos >= i {
        return Some(successor_between(ops, a, lo, r, pos, i));
    }
    let end = (q * chunk_len).min(ops.seq().count(a));
    if end == r {
        return None;
    }
    let end_pos = ops.select(a, end).unwrap();
    if end_pos < i {
        return None;
    }
    Some(successor_between(ops, a, r, end, end_pos, i))
}

/// The one-select check on the leftmost occurrence `k` of `a` in `i..=j`:
/// `a` is a majority iff its `threshold`-th next occurrence is within `j`.
pub fn check_candidate(
    ops: &mut Counted<'_>,
    a: u32,
    k: usize,
    j: usize,
    threshold: usize,
) -> Result<Verdict> {
    let (sym, r) = ops.partial_rank(k);
    if sym != a {
        return Err(Error::domain("candidate", format!("position {k} holds {sym}, not {a}")));
    }
    let majority = ops.select(a, r + threshold).is_some_and(|p| p <= j);
    Ok(Verdict { majority, rank: r })
}

/// Linked-list scan: take the first remaining position, remove every
/// occurrence of its symbol up to `j`, and report the symbol if it was
/// removed more than `threshold` times. Stops once too few positions remain
/// for another majority.
pub fn sequential_majorities(ops: &mut Counted<'_>, i: usize, j: usize, threshold: usize) -> Vec<(u32, usize)> {
    let len = j + 1 - i;
    let mut list = PosList::new(len);
    let mut remaining = len;
    let mut out = Vec::new();
    while remaining > threshold {
        let Some(off) = list.head() else { break };
        let (a, r) = ops.partial_rank(i + off);
        list.remove(off);
        let mut occ = 1;
        while let Some(p) = ops.select(a, r + occ).filter(|&p| p <= j) {
            list.remove(p - i);
            occ += 1;
        }
        ops.stats.candidates += 1;
        remaining -= occ;
        if occ > threshold {
            out.push((a, occ));
        }
    }
    out.sort_unstable();
    out
}

/// Scan in segments of `seg` positions keeping only one segment's list.
/// Known majorities are cleared from each new segment starting after the
/// last position removed for them; other positions are skipped unless they
/// are the leftmost occurrence of their symbol in the range.
pub fn segmented_majorities(
    ops: &mut Counted<'_>,
    i: usize,
    j: usize,
    threshold: usize,
    seg: usize,
) -> Vec<(u32, usize)> {
    let seg = seg.max(1);
    let mut known: Vec<(u32, usize)> = Vec::new();
    let mut out = Vec::new();
    let mut cs = i;
    while cs <= j {
        let ce = (cs + seg - 1).min(j);
        let mut list = PosList::new(ce + 1 - cs);
        for (a, frontier) in known.iter_mut() {
            let (_, r) = ops.partial_rank(*frontier);
            let mut q = 1;
            while let Some(p) = ops.select(*a, r + q).filter(|&p| p <= ce) {
                list.remove(p - cs);
                *frontier = p;
                q += 1;
            }
        }
        let mut cur = list.head();
        while let Some(off) = cur {
            let k = cs + off;
            let (a, r) = ops.partial_rank(k);
            let prev = if r == 1 { 0 } else { ops.select(a, r - 1).unwrap() };
            if prev < i {
                let mut occ = 1;
                let mut frontier = k;
                while let Some(p) = ops.select(a, r + occ).filter(|&p| p <= j) {
                    if p <= ce {
                        list.remove(p - cs);
                        frontier = p;
                    }
                    occ += 1;
                }
                ops.stats.candidates += 1;
                if occ > threshold {
                    out.push((a, occ));
                    known.push((a, frontier));
                }
            }
            cur = list.after(off);
        }
        cs = ce + 1;
    }
    out.sort_unstable();
    out
}

/// Decodes the range and counts all symbols at once with the word-parallel
/// kernel.
fn word_parallel_majorities(
    ops: &mut Counted<'_>,
    kernel: &SwarParams,
    i: usize,
    j: usize,
    threshold: usize,
) -> Result<Vec<(u32, usize)>> {
    let syms: Vec<u8> = (i..=j).map(|k| (ops.access(k) - 1) as u8).collect();
    let counters = kernel.count(&syms)?;
    let counts = kernel.counts(&counters);
    let (high, _) = kernel.threshold_extract(&counters, threshold as u64 + 1, Band::High)?;
    ops.stats.candidates += counts.iter().filter(|&&c| c > 0).count();
    Ok(high
        .into_iter()
        .map(|s| (s + 1, counts[s as usize] as usize))
        .collect())
}

impl MajorityIndex {
    pub fn build(symbols: &[u32], sigma: u32, config: MajorityConfig) -> Result<Self> {
        config.validate()?;
        let n = symbols.len();
        let occ = Occurrences::new(symbols, sigma);
        let mut idx = Self {
            config,
            n,
            sigma,
            families: BTreeMap::new(),
            warnings: Vec::new(),
            swar: SwarParams::new(sigma).ok(),
        };
        let skip = match config.dispatch {
            Dispatch::ForceSequential => true,
            Dispatch::Auto => n < 64,
            Dispatch::ForceFlagged => n < 2,
        };
        if skip {
            return Ok(idx);
        }
        let max_b = n.ilog2();
        let max_t = ceil_lg(sigma);
        for b in 1..=max_b {
            // t = 0 means tau = 1, which has no strict majorities
            let ts: Vec<u32> = (1..=max_t.min(b)).filter(|&t| idx.min_b(t) <= b).collect();
            if ts.is_empty() {
                continue;
            }
            let scored = block_extremes(&occ, n, b);
            for &t in &ts {
                let need = 1usize << (b - t);
                let pos: Vec<usize> = scored
                    .iter()
                    .filter(|&&(_, c)| c as usize >= need)
                    .map(|&(p, _)| p as usize - 1)
                    .collect();
                let flags = BitStore::smallest(BitVector::from_indices(n, pos.iter().copied()));
                let blocks = n.div_ceil(1 << (b - 1));
                let envelope = 8.0 * n as f64 * 2f64.powi(t as i32 - b as i32) + 2.0 * blocks as f64;
                if pos.len() as f64 > envelope {
                    idx.warnings.push(format!(
                        "candidate flags t={t} b={b}: {} ones exceed envelope {envelope:.0}",
                        pos.len()
                    ));
                }
                let samples = match config.verify {
                    VerifyMode::CheckLemma => Some(build_samples(&occ, n, b, need, config.chunk_len)?),
                    VerifyMode::Rank => None,
                };
                idx.families.insert((t, b), Family { flags, samples });
            }
        }
        let stride = if n <= 512 { 1 } else { (n / 256).max(1) | 1 };
        idx.check_definition(symbols, &occ, stride)?;
        Ok(idx)
    }

    /// Smallest range scale with flags for threshold level `t`.
    fn min_b(&self, t: u32) -> u32 {
        match self.config.dispatch {
            Dispatch::Auto => t + self.config.lg_trade() + 2,
            Dispatch::ForceFlagged => t.max(1),
            Dispatch::ForceSequential => u32::MAX,
        }
    }

    /// Compares every family with its definition at every `stride`-th
    /// position.
    fn check_definition(&self, symbols: &[u32], occ: &Occurrences, stride: usize) -> Result<()> {
        let n = self.n;
        let prev = crate::listing::previous_occurrences(symbols);
        let mut next = vec![u32::MAX; n];
        let mut last = vec![u32::MAX; self.sigma as usize + 1];
        for k in (0..n).rev() {
            next[k] = last[symbols[k] as usize];
            last[symbols[k] as usize] = k as u32 + 1;
        }
        for (&(t, b), fam) in &self.families {
            let need = 1usize << (b - t);
            let half = 1usize << (b - 1);
            let radius = 1usize << (b + 1);
            for k in (1..=n).step_by(stride) {
                let a = symbols[k - 1];
                let (lo, hi) = window(k, radius, n);
                let dense = occ.count_in(a, lo, hi) >= need;
                let blo = (k - 1) / half * half + 1;
                let bhi = (blo + half - 1).min(n);
                let extreme = (prev[k - 1] as usize) < blo || next[k - 1] as usize > bhi;
                if fam.flags.get(k - 1) != (dense && extreme) {
                    return Err(Error::Invariant(format!(
                        "candidate flag t={t} b={b} at position {k} disagrees with its definition"
                    )));
                }
            }
            if let Some(s) = &fam.samples {
                if s.flags.count_ones() > n / self.config.chunk_len {
                    return Err(Error::Invariant(format!(
                        "sample flags t={t} b={b} exceed n/chunk_len"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks every candidate flag of every family against `symbols`.
    pub fn audit(&self, symbols: &[u32]) -> Result<()> {
        if symbols.len() != self.n {
            return Err(Error::Config("symbols do not match the index".into()));
        }
        self.check_definition(symbols, &Occurrences::new(symbols, self.sigma), 1)
    }

    pub fn config(&self) -> MajorityConfig {
        self.config
    }

    /// Envelope violations noticed at build time.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn family_keys(&self) -> Vec<(u32, u32)> {
        self.families.keys().copied().collect()
    }

    /// Flagged positions (1-based) of the candidate family `(t, b)`.
    pub fn candidate_flags(&self, t: u32, b: u32) -> Option<Vec<usize>> {
        let f = self.families.get(&(t, b))?;
        Some(f.flags.ones_in(0, self.n).map(|p| p + 1).collect())
    }

    /// Sampled positions (1-based) of family `(t, b)`, if built.
    pub fn sample_flags(&self, t: u32, b: u32) -> Option<Vec<usize>> {
        let s = self.families.get(&(t, b))?.samples.as_ref()?;
        Some(s.flags.ones_in(0, self.n).map(|p| p + 1).collect())
    }

    /// Per-family sizes in bits, keyed by `(t, b)`.
    pub fn family_bits(&self) -> Vec<((u32, u32), usize, usize)> {
        self.families
            .iter()
            .map(|(&k, f)| {
                let s = f.samples.as_ref().map_or(0, |s| {
                    s.flags.size_bits() + s.prev.size_bits() + s.rmq.size_bits()
                });
                (k, f.flags.size_bits(), s)
            })
            .collect()
    }

    pub fn size_bits(&self) -> usize {
        self.family_bits().iter().map(|&(_, g, s)| g + s + 64).sum::<usize>() + 4 * 64
    }

    /// Flips one candidate flag. Exists only so verification tooling can
    /// prove it detects a corrupted index.
    #[doc(hidden)]
    pub fn inject_fault(&mut self, t: u32, b: u32, pos: usize) -> Result<()> {
        let f = self
            .families
            .get_mut(&(t, b))
            .ok_or_else(|| Error::Config(format!("no family t={t} b={b}")))?;
        if pos == 0 || pos > self.n {
            return Err(Error::range("position", pos, 1, self.n));
        }
        f.flags.flip(pos - 1);
        Ok(())
    }

    /// Route a query with these parameters takes.
    pub fn route(&self, p: &RangeParams) -> QueryPath {
        if p.majority_min() > p.len {
            return QueryPath::None;
        }
        if p.below_inverse_sigma(self.sigma) {
            return QueryPath::Exhaustive;
        }
        if self.families.contains_key(&(p.t, p.b)) {
            return QueryPath::Flagged;
        }
        if self.sigma >= 2 && self.swar.as_ref().is_some_and(|k| p.len <= k.capacity()) {
            QueryPath::WordParallel
        } else {
            QueryPath::Sequential
        }
    }

    /// Every symbol with more than `tau * len` occurrences in `i..=j`,
    /// ascending, with exact counts.
    pub fn query(&self, ops: &mut Counted<'_>, listing: &ListingIndex, p: &RangeParams) -> Result<Vec<(u32, usize)>> {
        let path = self.route(p);
        ops.stats.path = path;
        let th = p.threshold;
        match path {
            QueryPath::None => Ok(Vec::new()),
            QueryPath::Exhaustive => Ok(self.exhaustive(ops, listing, p)),
            QueryPath::Flagged => Ok(self.flagged(ops, p)),
            QueryPath::WordParallel => word_parallel_majorities(ops, self.swar.as_ref().unwrap(), p.i, p.j, th),
            _ => Ok(if self.config.trade > 1 {
                segmented_majorities(ops, p.i, p.j, th, p.inverse_ceil())
            } else {
                sequential_majorities(ops, p.i, p.j, th)
            }),
        }
    }

    fn exhaustive(&self, ops: &mut Counted<'_>, listing: &ListingIndex, p: &RangeParams) -> Vec<(u32, usize)> {
        let th = p.threshold;
        let mut out = Vec::new();
        match self.config.verify {
            VerifyMode::Rank => {
                for a in 1..=self.sigma {
                    ops.stats.candidates += 1;
                    let c = ops.count(a, p.i, p.j);
                    if c > th {
                        out.push((a, c));
                    }
                }
            }
            VerifyMode::CheckLemma => {
                listing.list_with(ops, p.i, p.j, |ops, k| {
                    let (a, r) = ops.partial_rank(k);
                    ops.stats.candidates += 1;
                    if ops.select(a, r + th).is_some_and(|x| x <= p.j) {
                        let c = ops.rank(a, p.j) + 1 - r;
                        out.push((a, c));
                    }
                    true
                });
                out.sort_unstable();
            }
        }
        out
    }

    fn flagged(&self, ops: &mut Counted<'_>, p: &RangeParams) -> Vec<(u32, usize)> {
        let fam = &self.families[&(p.t, p.b)];
        let th = p.threshold;
        let mut out = Vec::new();
        let mut decided: HashSet<u32> = HashSet::new();
        match self.config.verify {
            VerifyMode::Rank => {
                for k in fam.flags.ones_in(p.i - 1, p.j) {
                    let a = ops.access(k + 1);
                    if decided.insert(a) {
                        ops.stats.candidates += 1;
                        let c = ops.count(a, p.i, p.j);
                        if c > th {
                            out.push((a, c));
                        }
                    }
                }
            }
            VerifyMode::CheckLemma => {
                let c = self.config.chunk_len;
                // candidates whose chunk starts inside the range are left
                // to the sampled route
                let mut deferred: HashSet<u32> = HashSet::new();
                for k in fam.flags.ones_in(p.i - 1, p.j) {
                    let (a, r) = ops.partial_rank(k + 1);
                    if decided.contains(&a) || deferred.contains(&a) {
                        continue;
                    }
                    match successor_in_chunk(ops, c, a, r, k + 1, p.i) {
                        Some((r0, _)) => {
                            decided.insert(a);
                            self.lemma(ops, a, r0, p, &mut out);
                        }
                        None => {
                            deferred.insert(a);
                        }
                    }
                }
                if let Some(s) = &fam.samples {
                    let lo = s.flags.rank1(p.i - 1);
                    let hi = s.flags.rank1(p.j);
                    if lo < hi {
                        let mut found = Vec::new();
                        let steps = list_below(&s.prev, &s.rmq, lo, hi - 1, lo as u64 + 1, |m| {
                            found.push(m);
                            true
                        });
                        ops.stats.listing_steps += steps;
                        for m in found {
                            let pos = s.flags.select1(m + 1).unwrap();
                            let (a, r) = ops.partial_rank(pos);
                            if !decided.insert(a) {
                                continue;
                            }
                            if let Some((r0, _)) = successor_in_chunk(ops, c, a, r, pos, p.i) {
                                self.lemma(ops, a, r0, p, &mut out);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Checks the occurrence of rank `r0`, known to be the leftmost of `a`
    /// in the range, and records `a` with its count if it is a majority.
    fn lemma(&self, ops: &mut Counted<'_>, a: u32, r0: usize, p: &RangeParams, out: &mut Vec<(u32, usize)>) {
        ops.stats.candidates += 1;
        if ops.select(a, r0 + p.threshold).is_some_and(|x| x <= p.j) {
            let c = ops.rank(a, p.j) + 1 - r0;
            out.push((a, c));
        }
    }

    /// Public form of the chunk successor search: the leftmost occurrence
    /// of `a` at or after `i` within the chunk of the occurrence at
    /// `anchor`.
    pub fn chunk_successor(&self, ops: &mut Counted<'_>, a: u32, anchor: usize, i: usize) -> Result<Option<usize>> {
        if anchor == 0 || anchor > self.n {
            return Err(Error::range("anchor", anchor, 1, self.n));
        }
        let (sym, r) = ops.partial_rank(anchor);
        if sym != a {
            return Err(Error::domain("anchor", format!("position {anchor} holds {sym}, not {a}")));
        }
        Ok(successor_in_chunk(ops, self.config.chunk_len, a, r, anchor, i).map(|(_, p)| p))
    }

    /// Most frequent symbol of `i..=j` (smallest on ties) and its count,
    /// found by halving the threshold from 1/2 until some majority exists.
    pub fn mode(&self, ops: &mut Counted<'_>, listing: &ListingIndex, i: usize, j: usize) -> Result<(u32, usize)> {
        let mut tau = 0.5;
        loop {
            ops.stats.iterations += 1;
            let p = RangeParams::new(self.n, i, j, tau)?;
            let found = self.query(ops, listing, &p)?;
            if let Some(&best) = found.iter().max_by(|x, y| x.1.cmp(&y.1).then(y.0.cmp(&x.0))) {
                ops.stats.path = QueryPath::Mode;
                return Ok(best);
            }
            if tau < f64::MIN_POSITIVE {
                return Err(Error::Logic("threshold descent found no symbol".into()));
            }
            tau /= 2.0;
        }
    }
}

/// Block-extremal occurrences for blocks of `2^(b-1)`, each with the count
/// of its symbol within distance `2^(b+1)`, sorted by position.
fn block_extremes(occ: &Occurrences, n: usize, b: u32) -> Vec<(u32, u32)> {
    let half = 1usize << (b - 1);
    let radius = 1usize << (b + 1);
    let mut out: Vec<(u32, u32)> = Vec::new();
    for a in 1..=occ.sigma() {
        let list = occ.of(a);
        let (mut lo, mut hi) = (0usize, 0usize);
        let mut idx = 0;
        while idx < list.len() {
            let block = (list[idx] as usize - 1) / half;
            let mut end = idx;
            while end + 1 < list.len() && (list[end + 1] as usize - 1) / half == block {
                end += 1;
            }
            for e in if end == idx { vec![idx] } else { vec![idx, end] } {
                let k = list[e] as usize;
                let (wl, wh) = window(k, radius, n);
                while (list[lo] as usize) < wl {
                    lo += 1;
                }
                while hi < list.len() && list[hi] as usize <= wh {
                    hi += 1;
                }
                out.push((k as u32, (hi - lo) as u32));
            }
            idx = end + 1;
        }
    }
    out.sort_unstable();
    out
}

/// Every `chunk_len`-th occurrence whose surrounding window holds at least
/// `need` occurrences of its symbol, plus listing support over them.
fn build_samples(occ: &Occurrences, n: usize, b: u32, need: usize, chunk_len: usize) -> Result<Samples> {
    let radius = 1usize << (b + 1);
    let mut marked: Vec<(u32, u32)> = Vec::new();
    for a in 1..=occ.sigma() {
        let list = occ.of(a);
        for q in (chunk_len..=list.len()).step_by(chunk_len) {
            let k = list[q - 1] as usize;
            let (lo, hi) = window(k, radius, n);
            if occ.count_in(a, lo, hi) >= need {
                marked.push((k as u32, a));
            }
        }
    }
    marked.sort_unstable();
    let mut last: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
    let prev: Vec<u32> = marked
        .iter()
        .enumerate()
        .map(|(m, &(_, a))| last.insert(a, m as u32 + 1).unwrap_or(0))
        .collect();
    let prev = IntVector::from_slice_min_width(&prev);
    let rmq = RmqIndex::build(&prev);
    let positions: Vec<usize> = marked.iter().map(|&(k, _)| k as usize - 1).collect();
    Ok(Samples {
        flags: BitStore::sparse_from_positions(n, &positions),
        prev,
        rmq,
    })
}

impl Persist for MajorityIndex {
    fn write_to(&self, w: &mut Writer) {
        w.section(b"MAJX", |w| {
            w.usize(self.config.chunk_len);
            w.usize(self.config.trade);
            w.u8(match self.config.verify {
                VerifyMode::Rank => 0,
                VerifyMode::CheckLemma => 1,
            });
            w.u8(match self.config.dispatch {
                Dispatch::Auto => 0,
                Dispatch::ForceSequential => 1,
                Dispatch::ForceFlagged => 2,
            });
            w.usize(self.n);
            w.u32(self.sigma);
            w.usize(self.warnings.len());
            for s in &self.warnings {
                w.str(s);
            }
            w.usize(self.families.len());
            for (&(t, b), f) in &self.families {
                w.u32(t);
                w.u32(b);
                f.flags.write_to(w);
                match &f.samples {
                    None => w.u8(0),
                    Some(s) => {
                        w.u8(1);
                        s.flags.write_to(w);
                        s.prev.write_to(w);
                        s.rmq.write_to(w);
                    }
                }
            }
        });
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let mut s = r.section(b"MAJX")?;
        let chunk_len = s.usize()?;
        let trade = s.usize()?;
        let verify = match s.u8()? {
            0 => VerifyMode::Rank,
            1 => VerifyMode::CheckLemma,
            k => return Err(Error::format(format!("unknown verify mode {k}"))),
        };
        let dispatch = match s.u8()? {
            0 => Dispatch::Auto,
            1 => Dispatch::ForceSequential,
            2 => Dispatch::ForceFlagged,
            k => return Err(Error::format(format!("unknown dispatch {k}"))),
        };
        let config = MajorityConfig {
            chunk_len,
            trade,
            verify,
            dispatch,
        };
        config.validate().map_err(|e| Error::format(e.to_string()))?;
        let n = s.usize()?;
        let sigma = s.u32()?;
        let nw = s.usize()?;
        let mut warnings = Vec::new();
        for _ in 0..nw.min(1 << 16) {
            warnings.push(s.string()?);
        }
        let nf = s.usize()?;
        let mut families = BTreeMap::new();
        for _ in 0..nf {
            let t = s.u32()?;
            let b = s.u32()?;
            if t > b || b > 63 {
                return Err(Error::format(format!("bad family key t={t} b={b}")));
            }
            let flags = BitStore::read_from(&mut s)?;
            let samples = match s.u8()? {
                0 => None,
                1 => {
                    let flags = BitStore::read_from(&mut s)?;
                    let prev = IntVector::read_from(&mut s)?;
                    let rmq = RmqIndex::read_from(&mut s)?;
                    if prev.len() != flags.count_ones() || rmq.len() != prev.len() || flags.len() != n {
                        return Err(Error::format("sample family shape mismatch"));
                    }
                    Some(Samples { flags, prev, rmq })
                }
                k => return Err(Error::format(format!("unknown sample marker {k}"))),
            };
            if flags.len() != n {
                return Err(Error::format("candidate family length mismatch"));
            }
            families.insert((t, b), Family { flags, samples });
        }
        s.finish("majority index")?;
        Ok(Self {
            config,
            n,
            sigma,
            families,
            warnings,
            swar: SwarParams::new(sigma).ok(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{SequenceConfig, WaveletSequence};

    const S: [u32; 11] = [1, 2, 3, 1, 4, 1, 5, 1, 2, 3, 1];

    fn seq(s: &[u32]) -> WaveletSequence {
        WaveletSequence::build(s, *s.iter().max().unwrap(), SequenceConfig::default()).unwrap()
    }

    #[test]
    fn check_candidate_examples() {
        let sq = seq(&S);
        let mut ops = Counted::new(&sq);
        let v = check_candidate(&mut ops, 1, 4, 8, 2).unwrap();
        assert!(v.majority);
        assert_eq!(v.rank, 2);
        assert_eq!((ops.stats.partial_ranks, ops.stats.selects), (1, 1));
        assert!(!check_candidate(&mut ops, 5, 7, 8, 2).unwrap().majority);
        assert!(check_candidate(&mut ops, 4, 5, 8, 0).unwrap().majority);
        assert!(check_candidate(&mut ops, 2, 5, 8, 0).is_err());
    }

    #[test]
    fn sequential_examples() {
        let sq = seq(&S);
        let mut ops = Counted::new(&sq);
        assert_eq!(sequential_majorities(&mut ops, 1, 11, 2), vec![(1, 5)]);
        assert_eq!(sequential_majorities(&mut ops, 1, 11, 5), vec![]);
        assert_eq!(segmented_majorities(&mut ops, 1, 11, 2, 4), vec![(1, 5)]);
        let nines = seq(&[9, 9, 9]);
        let mut ops = Counted::new(&nines);
        assert_eq!(sequential_majorities(&mut ops, 1, 3, 2), vec![(9, 3)]);
    }

    #[test]
    fn candidate_flag_examples() {
        let cfg = MajorityConfig {
            dispatch: Dispatch::ForceFlagged,
            ..MajorityConfig::default()
        };
        let idx = MajorityIndex::build(&[1, 1, 1, 1], 2, cfg).unwrap();
        assert_eq!(idx.candidate_flags(1, 1).unwrap(), vec![1, 2, 3, 4]);
        assert!(idx.candidate_flags(0, 1).is_none());
        let distinct: Vec<u32> = (1..=32).collect();
        let idx = MajorityIndex::build(&distinct, 32, cfg).unwrap();
        for b in 2..=5 {
            assert_eq!(idx.candidate_flags(1, b).unwrap(), Vec::<usize>::new());
        }
        let idx = MajorityIndex::build(&S, 5, cfg).unwrap();
        assert!(idx.warnings().is_empty());
    }

    #[test]
    fn chunk_successor_examples() {
        let cfg = MajorityConfig {
            chunk_len: 2,
            ..MajorityConfig::default()
        };
        let idx = MajorityIndex::build(&S, 5, cfg).unwrap();
        let sq = seq(&S);
        let mut ops = Counted::new(&sq);
        assert_eq!(idx.chunk_successor(&mut ops, 1, 8, 5).unwrap(), Some(6));
        assert_eq!(idx.chunk_successor(&mut ops, 1, 8, 8).unwrap(), Some(8));
        assert_eq!(idx.chunk_successor(&mut ops, 1, 8, 9).unwrap(), None);
        assert_eq!(idx.chunk_successor(&mut ops, 1, 8, 4).unwrap(), None);
    }
}
