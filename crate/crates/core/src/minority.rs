//! Range tau-minority queries.
//!
//! Any `ceil(1/tau)` distinct symbols of a range include a minority, since
//! fewer than `1/tau` symbols can be majorities. The listing strategy takes
//! those symbols from colored range listing. The flags strategy takes them
//! from per-scale bitvectors that mark, in every block of `2^(b-1)`
//! positions, the leftmost occurrences of the first `2^t` distinct symbols
//! and the rightmost occurrences of the last `2^t`.

use std::collections::{BTreeMap, HashSet};

use crate::bits::{BitStore, BitVector};
use crate::error::{Error, Result};
use crate::listing::ListingIndex;
use crate::majority::{Dispatch, VerifyMode};
use crate::persist::{Persist, Reader, Writer};
use crate::stats::{Counted, QueryPath};
use crate::swar::{Band, SwarParams};
use crate::threshold::RangeParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Listing,
    Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinorityConfig {
    pub strategy: Strategy,
    pub verify: VerifyMode,
    pub dispatch: Dispatch,
    /// Time/space trade `g`, as for majorities.
    pub trade: usize,
}

impl Default for MinorityConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Flags,
            verify: VerifyMode::Rank,
            dispatch: Dispatch::Auto,
            trade: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinorityIndex {
    config: MinorityConfig,
    n: usize,
    sigma: u32,
    families: BTreeMap<(u32, u32), BitStore>,
    swar: Option<SwarParams>,
}

fn ceil_lg(x: u32) -> u32 {
    if x <= 1 {
        0
    } else {
        (x - 1).ilog2() + 1
    }
}

/// The negation of the one-select majority check: `a`, whose leftmost
/// occurrence in `i..=j` is `k`, occurs at most `threshold` times there.
pub fn verify_minority(ops: &mut Counted<'_>, a: u32, k: usize, j: usize, threshold: usize) -> Result<bool> {
    if threshold == 0 {
        return Ok(false);
    }
    let v = crate::majority::check_candidate(ops, a, k, j, threshold)?;
    Ok(!v.majority)
}

/// Minority test from an arbitrary occurrence `k` (rank `r`) of `a` inside
/// `i..=j`: finds the leftmost occurrence by bisection over the ranks that
/// could still leave `a` a minority, then applies the one-select check.
/// Returns the count when `a` is a minority.
fn minority_from(ops: &mut Counted<'_>, a: u32, r: usize, i: usize, j: usize, th: usize) -> Option<usize> {
    // th + 1 occurrences in i..=k already make a majority
    if r > th && ops.select(a, r - th).unwrap() >= i {
        return None;
    }
    let mut lo = r.saturating_sub(th);
    let mut hi = r;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ops.select(a, mid).unwrap() >= i {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    match ops.select(a, hi + th) {
        Some(p) if p <= j => None,
        _ => Some(walk_count(ops, a, hi, j)),
    }
}

/// Occurrences of `a` from rank `r` up to position `j`, by galloping and
/// then bisecting over selects. Occurrence `r` must lie in range.
fn walk_count(ops: &mut Counted<'_>, a: u32, r: usize, j: usize) -> usize {
    let inside = |ops: &mut Counted<'_>, c: usize| ops.select(a, r + c - 1).is_some_and(|p| p <= j);
    // inside(lo) holds, inside(hi) does not
    let mut lo = 1;
    let mut step = 1;
    let mut hi = loop {
        let probe = lo + step;
        if !inside(ops, probe) {
            break probe;
        }
        lo = probe;
        step *= 2;
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if inside(ops, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Linked-list scan that stops at the first head symbol that is not a
/// majority.
pub fn sequential_minority(ops: &mut Counted<'_>, i: usize, j: usize, threshold: usize) -> Option<(u32, usize)> {
    if threshold == 0 {
        return None;
    }
    let len = j + 1 - i;
    if threshold >= len {
        let (a, r) = ops.partial_rank(i);
        ops.stats.candidates += 1;
        return Some((a, walk_count(ops, a, r, j)));
    }
    let mut removed = vec![false; len];
    let mut off = 0;
    while off < len {
        if removed[off] {
            off += 1;
            continue;
        }
        let (a, r) = ops.partial_rank(i + off);
        ops.stats.candidates += 1;
        let mut occ = 1;
        while let Some(p) = ops.select(a, r + occ).filter(|&p| p <= j) {
            removed[p - i] = true;
            occ += 1;
            if occ > threshold {
                break;
            }
        }
        if occ <= threshold {
            return Some((a, occ));
        }
        while let Some(p) = ops.select(a, r + occ).filter(|&p| p <= j) {
            removed[p - i] = true;
            occ += 1;
        }
        off += 1;
    }
    None
}

impl MinorityIndex {
    pub fn build(symbols: &[u32], sigma: u32, config: MinorityConfig) -> Result<Self> {
        if config.trade == 0 {
            return Err(Error::Config("trade parameter g must be at least 1".into()));
        }
        let n = symbols.len();
        let mut idx = Self {
            config,
            n,
            sigma,
            families: BTreeMap::new(),
            swar: SwarParams::new(sigma).ok(),
        };
        let skip = config.strategy == Strategy::Listing
            || match config.dispatch {
                Dispatch::ForceSequential => true,
                Dispatch::Auto => n < 64,
                Dispatch::ForceFlagged => n < 2,
            };
        if skip {
            return Ok(idx);
        }
        let max_t = ceil_lg(sigma);
        let mut stamp = vec![0u32; sigma as usize + 1];
        let mut epoch = 0u32;
        for b in 1..=n.ilog2() {
            // t = 0 means tau = 1, answered by the first symbol of the range
            let ts: Vec<u32> = (1..=max_t.min(b)).filter(|&t| idx.min_b(t) <= b).collect();
            let Some(&top) = ts.last() else { continue };
            let half = 1usize << (b - 1);
            let keep = 1usize << top;
            // per block: first-distinct positions left to right and
            // last-distinct positions right to left, at most 2^top each
            let mut firsts: Vec<Vec<u32>> = Vec::new();
            let mut lasts: Vec<Vec<u32>> = Vec::new();
            for (bi, block) in symbols.chunks(half).enumerate() {
                let base = bi * half;
                let mut f = Vec::new();
                epoch += 1;
                for (o, &a) in block.iter().enumerate() {
                    if stamp[a as usize] != epoch {
                        stamp[a as usize] = epoch;
                        f.push((base + o) as u32);
                        if f.len() == keep {
                            break;
                        }
                    }
                }
                let mut l = Vec::new();
                epoch += 1;
                for (o, &a) in block.iter().enumerate().rev() {
                    if stamp[a as usize] != epoch {
                        stamp[a as usize] = epoch;
                        l.push((base + o) as u32);
                        if l.len() == keep {
                            break;
                        }
                    }
                }
                firsts.push(f);
                lasts.push(l);
            }
            for &t in &ts {
                let k = 1usize << t;
                let mut pos: Vec<usize> = Vec::new();
                for (f, l) in firsts.iter().zip(&lasts) {
                    pos.extend(f.iter().take(k).map(|&p| p as usize));
                    pos.extend(l.iter().take(k).map(|&p| p as usize));
                }
                pos.sort_unstable();
                pos.dedup();
                let flags = BitStore::smallest(BitVector::from_indices(n, pos.iter().copied()));
                idx.families.insert((t, b), flags);
            }
        }
        idx.self_check(symbols)?;
        Ok(idx)
    }

    fn min_b(&self, t: u32) -> u32 {
        match self.config.dispatch {
            Dispatch::Auto => t + self.config.trade.next_power_of_two().trailing_zeros() + 2,
            Dispatch::ForceFlagged => t.max(1),
            Dispatch::ForceSequential => u32::MAX,
        }
    }

    /// Checks each family against its definition for short sequences and
    /// the per-block count bound always.
    fn self_check(&self, symbols: &[u32]) -> Result<()> {
        let n = self.n;
        for (&(t, b), flags) in &self.families {
            let half = 1usize << (b - 1);
            let k = 1usize << t;
            for bs in (0..n).step_by(half) {
                let be = (bs + half).min(n);
                let ones = flags.ones_in(bs, be).count();
                if ones > 2 * k {
                    return Err(Error::Invariant(format!(
                        "minority flags t={t} b={b}: {ones} ones in one block"
                    )));
                }
                if n > 512 {
                    continue;
                }
                let block = &symbols[bs..be];
                let mut left: HashSet<u32> = HashSet::new();
                for (o, &a) in block.iter().enumerate() {
                    let first = left.insert(a) && left.len() <= k;
                    let right: HashSet<u32> = block[o..].iter().copied().collect();
                    let last = !block[o + 1..].contains(&a) && right.len() <= k;
                    if flags.get(bs + o) != (first || last) {
                        return Err(Error::Invariant(format!(
                            "minority flag t={t} b={b} at position {} disagrees with its definition",
                            bs + o + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn config(&self) -> MinorityConfig {
        self.config
    }

    pub fn family_keys(&self) -> Vec<(u32, u32)> {
        self.families.keys().copied().collect()
    }

    /// Flagged positions (1-based) of family `(t, b)`.
    pub fn flags(&self, t: u32, b: u32) -> Option<Vec<usize>> {
        let f = self.families.get(&(t, b))?;
        Some(f.ones_in(0, self.n).map(|p| p + 1).collect())
    }

    pub fn family_bits(&self) -> Vec<((u32, u32), usize)> {
        self.families.iter().map(|(&k, f)| (k, f.size_bits())).collect()
    }

    pub fn size_bits(&self) -> usize {
        self.families.values().map(|f| f.size_bits() + 64).sum::<usize>() + 4 * 64
    }

    pub fn route(&self, p: &RangeParams) -> QueryPath {
        if p.threshold == 0 {
            return QueryPath::None;
        }
        if p.threshold >= p.len {
            // every symbol qualifies; the sequential scan stops at the first
            return QueryPath::Sequential;
        }
        if self.config.strategy == Strategy::Listing {
            return QueryPath::Listing;
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

    /// Some symbol occurring in `i..=j` at least once and at most
    /// `floor(tau * len)` times, with its count.
    pub fn query(&self, ops: &mut Counted<'_>, listing: &ListingIndex, p: &RangeParams) -> Result<Option<(u32, usize)>> {
        let path = self.route(p);
        ops.stats.path = path;
        let th = p.threshold;
        Ok(match path {
            QueryPath::None => None,
            QueryPath::Listing => self.by_listing(ops, listing, p, p.inverse_ceil()),
            QueryPath::Exhaustive => match self.config.verify {
                VerifyMode::Rank => {
                    let mut found = None;
                    for a in 1..=self.sigma {
                        ops.stats.candidates += 1;
                        let c = ops.count(a, p.i, p.j);
                        if c >= 1 && c <= th {
                            found = Some((a, c));
                            break;
                        }
                    }
                    found
                }
                VerifyMode::CheckLemma => self.by_listing(ops, listing, p, self.sigma as usize),
            },
            QueryPath::Flagged => self.flagged(ops, p),
            QueryPath::WordParallel => {
                let kernel = self.swar.as_ref().unwrap();
                let syms: Vec<u8> = (p.i..=p.j).map(|k| (ops.access(k) - 1) as u8).collect();
                let counters = kernel.count(&syms)?;
                let (_, low) = kernel.threshold_extract(&counters, th as u64 + 1, Band::Low)?;
                ops.stats.candidates += 1;
                low.first().map(|&s| (s + 1, kernel.counts(&counters)[s as usize] as usize))
            }
            _ => sequential_minority(ops, p.i, p.j, th),
        })
    }

    /// Lists up to `limit` distinct symbols by their leftmost occurrences
    /// and returns the first minority among them.
    fn by_listing(&self, ops: &mut Counted<'_>, listing: &ListingIndex, p: &RangeParams, limit: usize) -> Option<(u32, usize)> {
        let th = p.threshold;
        let mut found = None;
        let mut seen = 0;
        listing.list_with(ops, p.i, p.j, |ops, k| {
            let (a, r) = ops.partial_rank(k);
            ops.stats.candidates += 1;
            seen += 1;
            if ops.select(a, r + th).is_none_or(|x| x > p.j) {
                found = Some((a, walk_count(ops, a, r, p.j)));
                return false;
            }
            seen < limit
        });
        found
    }

    fn flagged(&self, ops: &mut Counted<'_>, p: &RangeParams) -> Option<(u32, usize)> {
        let flags = &self.families[&(p.t, p.b)];
        let th = p.threshold;
        let limit = p.inverse_ceil();
        let mut tried: HashSet<u32> = HashSet::new();
        for k in flags.ones_in(p.i - 1, p.j) {
            if tried.len() >= limit {
                break;
            }
            match self.config.verify {
                VerifyMode::Rank => {
                    let a = ops.access(k + 1);
                    if !tried.insert(a) {
                        continue;
                    }
                    ops.stats.candidates += 1;
                    let c = ops.count(a, p.i, p.j);
                    if c <= th {
                        return Some((a, c));
                    }
                }
                VerifyMode::CheckLemma => {
                    let (a, r) = ops.partial_rank(k + 1);
                    if !tried.insert(a) {
                        continue;
                    }
                    ops.stats.candidates += 1;
                    if let Some(c) = minority_from(ops, a, r, p.i, p.j, th) {
                        return Some((a, c));
                    }
                }
            }
        }
        None
    }
}

impl Persist for MinorityIndex {
    fn write_to(&self, w: &mut Writer) {
        w.section(b"MINX", |w| {
            w.u8(match self.config.strategy {
                Strategy::Listing => 0,
                Strategy::Flags => 1,
            });
            w.u8(match self.config.verify {
                VerifyMode::Rank => 0,
                VerifyMode::CheckLemma => 1,
            });
            w.u8(match self.config.dispatch {
                Dispatch::Auto => 0,
                Dispatch::ForceSequential => 1,
                Dispatch::ForceFlagged => 2,
            });
            w.usize(self.config.trade);
            w.usize(self.n);
            w.u32(self.sigma);
            w.usize(self.families.len());
            for (&(t, b), f) in &self.families {
                w.u32(t);
                w.u32(b);
                f.write_to(w);
            }
        });
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let mut s = r.section(b"MINX")?;
        let strategy = match s.u8()? {
            0 => Strategy::Listing,
            1 => Strategy::Flags,
            k => return Err(Error::format(format!("unknown minority strategy {k}"))),
        };
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
        let trade = s.usize()?;
        if trade == 0 {
            return Err(Error::format("trade parameter is zero"));
        }
        let n = s.usize()?;
        let sigma = s.u32()?;
        let nf = s.usize()?;
        let mut families = BTreeMap::new();
        for _ in 0..nf {
            let t = s.u32()?;
            let b = s.u32()?;
            if t > b || b == 0 || b > 63 {
                return Err(Error::format(format!("bad family key t={t} b={b}")));
            }
            let f = BitStore::read_from(&mut s)?;
            if f.len() != n {
                return Err(Error::format("minority family length mismatch"));
            }
            families.insert((t, b), f);
        }
        s.finish("minority index")?;
        Ok(Self {
            config: MinorityConfig {
                strategy,
                verify,
                dispatch,
                trade,
            },
            n,
            sigma,
            families,
            swar: SwarParams::new(sigma).ok(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{SequenceConfig, WaveletSequence};

    const S: [u32; 11] = [1, 2, 3, 1, 4, 1, 5, 1, 2, 3, 1];

    fn forced() -> MinorityConfig {
        MinorityConfig {
            dispatch: Dispatch::ForceFlagged,
            ..MinorityConfig::default()
        }
    }

    #[test]
    fn flag_examples() {
        let idx = MinorityIndex::build(&S, 5, forced()).unwrap();
        let f = idx.flags(1, 3).unwrap();
        assert_eq!(f.iter().filter(|&&p| p <= 4).copied().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        let unary = vec![7u32; 16];
        let idx = MinorityIndex::build(&unary, 7, forced()).unwrap();
        assert_eq!(idx.flags(1, 3).unwrap(), vec![1, 4, 5, 8, 9, 12, 13, 16]);
        assert!(idx.flags(0, 3).is_none());
        let distinct: Vec<u32> = (1..=8).collect();
        let idx = MinorityIndex::build(&distinct, 8, forced()).unwrap();
        assert_eq!(idx.flags(2, 3).unwrap(), (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn verify_examples() {
        let sq = WaveletSequence::build(&S, 5, SequenceConfig::default()).unwrap();
        let mut ops = Counted::new(&sq);
        assert!(verify_minority(&mut ops, 4, 5, 8, 2).unwrap());
        assert!(!verify_minority(&mut ops, 1, 4, 8, 2).unwrap());
        assert!(!verify_minority(&mut ops, 4, 5, 8, 0).unwrap());
    }

    #[test]
    fn sequential_examples() {
        let sq = WaveletSequence::build(&S, 5, SequenceConfig::default()).unwrap();
        let mut ops = Counted::new(&sq);
        let (a, c) = sequential_minority(&mut ops, 4, 8, 2).unwrap();
        assert!([(4, 1), (5, 1)].contains(&(a, c)));
        assert_eq!(sequential_minority(&mut ops, 1, 1, 0), None);
        let sq = WaveletSequence::build(&[3, 3, 3, 3], 3, SequenceConfig::default()).unwrap();
        let mut ops = Counted::new(&sq);
        assert_eq!(sequential_minority(&mut ops, 1, 4, 2), None);
    }
}
