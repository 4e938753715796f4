//! Colored range listing: the distinct symbols of `S[i..=j]` with their
//! leftmost positions, produced online so callers can stop early.
//!
//! A position `k` in `[i..j]` holds the leftmost occurrence of its symbol
//! exactly when its previous occurrence `C[k]` is below `i`. Listing recurses
//! on leftmost minima of `C`. The sparsified variant keeps only the minimum
//! of each block of `g` cells, and reads single cells through the sequence.

use std::collections::HashSet;

use crate::bits::{IntVector, RmqIndex, RmqSource};
use crate::error::{Error, Result};
use crate::persist::{Persist, Reader, Writer};
use crate::sequence::WaveletSequence;
use crate::stats::Counted;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ListingIndex {
    block: usize,
    /// `C` itself when `block == 1`, otherwise per-block minima of `C`.
    mins: IntVector,
    rmq: RmqIndex,
}

/// Previous-occurrence array, 1-based values with 0 for first occurrences.
pub fn previous_occurrences(symbols: &[u32]) -> Vec<u32> {
    let sigma = symbols.iter().copied().max().unwrap_or(0) as usize;
    let mut last = vec![0u32; sigma + 1];
    symbols
        .iter()
        .enumerate()
        .map(|(k, &a)| std::mem::replace(&mut last[a as usize], k as u32 + 1))
        .collect()
}

/// Reports, in listing order, the 0-based indices `m` in `lo..=hi` with
/// `src[m] < bound`: leftmost minimum first, then the left part, then the
/// right part. Stops when `visit` returns false. Returns the number of
/// ranges popped.
pub(crate) fn list_below<S: RmqSource + ?Sized>(
    src: &S,
    rmq: &RmqIndex,
    lo: usize,
    hi: usize,
    bound: u64,
    mut visit: impl FnMut(usize) -> bool,
) -> usize {
    let mut steps = 0;
    let mut stack = vec![(lo, hi)];
    while let Some((l, r)) = stack.pop() {
        steps += 1;
        let m = rmq.argmin(src, l, r);
        if src.value(m) >= bound {
            continue;
        }
        if !visit(m) {
            break;
        }
        if m < r {
            stack.push((m + 1, r));
        }
        if m > l {
            stack.push((l, m - 1));
        }
    }
    steps
}

impl ListingIndex {
    /// `block == 1` stores `C` in full; larger blocks keep one minimum per
    /// block.
    pub fn build(seq: &WaveletSequence, symbols: &[u32], block: usize) -> Result<Self> {
        if block == 0 {
            return Err(Error::Config("listing block length must be at least 1".into()));
        }
        if symbols.len() != seq.len() {
            return Err(Error::Config("symbols do not match the sequence".into()));
        }
        let c = previous_occurrences(symbols);
        let n = c.len();
        // cross-check the scan against the sequence's own previous-occurrence
        // query: every cell for short inputs, a stride otherwise
        let stride = if n <= 4096 { 1 } else { n / 1024 };
        for k in (1..=n).step_by(stride) {
            if seq.c_value_unchecked(k) != c[k - 1] as usize {
                return Err(Error::Invariant(format!(
                    "previous occurrence of position {k} disagrees with the sequence"
                )));
            }
        }
        let mins: Vec<u32> = if block == 1 {
            c
        } else {
            c.chunks(block).map(|b| *b.iter().min().unwrap()).collect()
        };
        let mins = IntVector::from_slice_min_width(&mins);
        let rmq = RmqIndex::build(&mins);
        Ok(Self { block, mins, rmq })
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn is_sparsified(&self) -> bool {
        self.block > 1
    }

    /// Per-block minima (or `C` itself when not sparsified).
    pub fn block_minima(&self) -> Vec<u64> {
        self.mins.iter().collect()
    }

    fn check(&self, n: usize, i: usize, j: usize, limit: usize) -> Result<()> {
        if i == 0 || i > j {
            return Err(Error::range("range start", i, 1, j.max(1)));
        }
        if j > n {
            return Err(Error::range("range end", j, i, n));
        }
        if limit == 0 {
            return Err(Error::domain("limit", "must be at least 1"));
        }
        if n != self.mins.len() * self.block && n.div_ceil(self.block) != self.mins.len() {
            return Err(Error::Config("listing index does not match the sequence".into()));
        }
        Ok(())
    }

    /// Up to `limit` distinct `(symbol, leftmost position)` pairs of
    /// `S[i..=j]`; all of them when fewer exist.
    pub fn list(&self, ops: &mut Counted<'_>, i: usize, j: usize, limit: usize) -> Result<Vec<(u32, usize)>> {
        self.check(ops.seq().len(), i, j, limit)?;
        let mut out = Vec::new();
        self.list_with(ops, i, j, |ops, m| {
            out.push((ops.access(m), m));
            out.len() < limit
        });
        Ok(out)
    }

    /// Visits leftmost positions in `i..=j` until `visit` returns false.
    /// Arguments are assumed valid.
    pub(crate) fn list_with(
        &self,
        ops: &mut Counted<'_>,
        i: usize,
        j: usize,
        mut visit: impl FnMut(&mut Counted<'_>, usize) -> bool,
    ) {
        if self.block == 1 {
            let steps = list_below(&self.mins, &self.rmq, i - 1, j - 1, i as u64, |m| {
                visit(ops, m + 1)
            });
            ops.stats.listing_steps += steps;
        } else {
            self.list_sparse(ops, i, j, &mut visit);
        }
    }

    fn list_sparse(
        &self,
        ops: &mut Counted<'_>,
        i: usize,
        j: usize,
        visit: &mut impl FnMut(&mut Counted<'_>, usize) -> bool,
    ) {
        let g = self.block;
        let mut reported: HashSet<u32> = HashSet::new();
        // scans cells lo..=hi; false once the caller stops
        let mut scan = |ops: &mut Counted<'_>, lo: usize, hi: usize| -> bool {
            for k in lo..=hi {
                ops.stats.probes += 1;
                let (a, r) = ops.partial_rank(k);
                let prev = if r == 1 { 0 } else { ops.select(a, r - 1).unwrap() };
                if prev < i && reported.insert(a) && !visit(ops, k) {
                    return false;
                }
            }
            true
        };
        // blocks lying entirely inside [i..j]
        let first_full = (i - 1).div_ceil(g);
        let last_full = (j / g).checked_sub(1);
        let (fb, lb) = match last_full {
            Some(lb) if first_full <= lb => (first_full, lb),
            _ => {
                scan(ops, i, j);
                return;
            }
        };
        if i <= fb * g && !scan(ops, i, fb * g) {
            return;
        }
        let mut stack = vec![(fb, lb)];
        while let Some((l, r)) = stack.pop() {
            ops.stats.listing_steps += 1;
            let m = self.rmq.argmin(&self.mins, l, r);
            if self.mins.get(m) >= i as u64 {
                continue;
            }
            if !scan(ops, m * g + 1, (m + 1) * g) {
                return;
            }
            if m < r {
                stack.push((m + 1, r));
            }
            if m > l {
                stack.push((l, m - 1));
            }
        }
        if (lb + 1) * g < j {
            scan(ops, (lb + 1) * g + 1, j);
        }
    }

    pub fn size_bits(&self) -> usize {
        self.mins.size_bits() + self.rmq.size_bits() + 64
    }
}

impl Persist for ListingIndex {
    fn write_to(&self, w: &mut Writer) {
        w.section(b"LIST", |w| {
            w.usize(self.block);
            self.mins.write_to(w);
            self.rmq.write_to(w);
        });
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let mut s = r.section(b"LIST")?;
        let block = s.usize()?;
        let mins = IntVector::read_from(&mut s)?;
        let rmq = RmqIndex::read_from(&mut s)?;
        s.finish("listing index")?;
        if block == 0 || rmq.len() != mins.len() {
            return Err(Error::format("listing index shape mismatch"));
        }
        Ok(Self { block, mins, rmq })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::SequenceConfig;
    use std::collections::BTreeSet;

    const S: [u32; 11] = [1, 2, 3, 1, 4, 1, 5, 1, 2, 3, 1];

    fn setup(s: &[u32], g: usize) -> (WaveletSequence, ListingIndex) {
        let sigma = *s.iter().max().unwrap();
        let seq = WaveletSequence::build(s, sigma, SequenceConfig::default()).unwrap();
        let li = ListingIndex::build(&seq, s, g).unwrap();
        (seq, li)
    }

    fn as_set(v: Vec<(u32, usize)>) -> BTreeSet<(u32, usize)> {
        v.into_iter().collect()
    }

    #[test]
    fn previous_occurrence_example() {
        assert_eq!(previous_occurrences(&S), vec![0, 0, 0, 1, 0, 4, 0, 6, 2, 3, 8]);
    }

    #[test]
    fn full_listing_examples() {
        let (seq, li) = setup(&S, 1);
        let mut ops = Counted::new(&seq);
        let got = as_set(li.list(&mut ops, 4, 8, 10).unwrap());
        assert_eq!(got, BTreeSet::from([(1, 4), (4, 5), (5, 7)]));
        assert_eq!(li.list(&mut ops, 3, 3, 10).unwrap(), vec![(3, 3)]);
        let two = li.list(&mut ops, 1, 11, 2).unwrap();
        assert_eq!(two.len(), 2);
        for (a, p) in two {
            assert_eq!(S[p - 1], a);
            assert!(!S[..p - 1].contains(&a));
        }
        assert!(li.list(&mut ops, 5, 4, 1).is_err());
        assert!(li.list(&mut ops, 1, 12, 1).is_err());
    }

    #[test]
    fn sparsified_examples() {
        let (seq, li) = setup(&S, 4);
        assert_eq!(li.block_minima(), vec![0, 0, 2]);
        let mut ops = Counted::new(&seq);
        let got = as_set(li.list(&mut ops, 1, 11, 10).unwrap());
        let (seq1, full) = setup(&S, 1);
        let want = as_set(full.list(&mut Counted::new(&seq1), 1, 11, 10).unwrap());
        assert_eq!(got, want);
        let (seq, li) = setup(&[1, 1, 1, 1], 2);
        let mut ops = Counted::new(&seq);
        assert_eq!(li.list(&mut ops, 2, 4, 10).unwrap(), vec![(1, 2)]);
    }
}
