//! Leftmost range-minimum queries.
//!
//! The indexed values are not copied: every query receives the value source.
//! A sparse table is kept over the minima of 32-entry blocks, and the
//! partial blocks at both ends of a query are scanned.

use super::intvec::IntVector;
use crate::error::{Error, Result};
use crate::persist::{Persist, Reader, Writer};

const BLOCK: usize = 32;

/// Read access to the array an [`RmqIndex`] was built over. Indices are
/// 0-based.
pub trait RmqSource {
    fn len(&self) -> usize;
    fn value(&self, idx: usize) -> u64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl RmqSource for [u32] {
    fn len(&self) -> usize {
        <[u32]>::len(self)
    }
    fn value(&self, idx: usize) -> u64 {
        self[idx] as u64
    }
}

impl RmqSource for Vec<u32> {
    fn len(&self) -> usize {
        <[u32]>::len(self)
    }
    fn value(&self, idx: usize) -> u64 {
        self[idx] as u64
    }
}

impl RmqSource for IntVector {
    fn len(&self) -> usize {
        IntVector::len(self)
    }
    fn value(&self, idx: usize) -> u64 {
        self.get(idx)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RmqIndex {
    len: usize,
    /// `table[k][b]`: index of the leftmost minimum over blocks
    /// `b..b + 2^k`.
    table: Vec<Vec<u32>>,
}

impl RmqIndex {
    pub fn build<S: RmqSource + ?Sized>(src: &S) -> Self {
        let len = src.len();
        assert!(len < u32::MAX as usize, "range-minimum arrays are limited to 2^32 - 1 entries");
        let nblocks = len.div_ceil(BLOCK);
        let mut level0 = Vec::with_capacity(nblocks);
        for b in 0..nblocks {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(len);
            level0.push(scan_min(src, lo, hi) as u32);
        }
        let mut table = vec![level0];
        let mut span = 1;
        while 2 * span <= nblocks {
            let prev = table.last().unwrap();
            let next: Vec<u32> = (0..=nblocks - 2 * span)
                .map(|b| better(src, prev[b], prev[b + span]))
                .collect();
            table.push(next);
            span *= 2;
        }
        Self { len, table }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// 0-based leftmost minimum of `src[lo..=hi]`.
    pub fn argmin<S: RmqSource + ?Sized>(&self, src: &S, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi && hi < self.len && src.len() == self.len);
        let (bl, bh) = (lo / BLOCK, hi / BLOCK);
        if bh - bl <= 1 {
            return scan_min(src, lo, hi + 1);
        }
        let mut best = scan_min(src, lo, (bl + 1) * BLOCK) as u32;
        let (a, b) = (bl + 1, bh - 1);
        let k = (b - a + 1).ilog2() as usize;
        let mid = better(src, self.table[k][a], self.table[k][b + 1 - (1 << k)]);
        best = better(src, best, mid);
        let tail = scan_min(src, bh * BLOCK, hi + 1) as u32;
        better(src, best, tail) as usize
    }

    /// 1-based leftmost minimum over positions `l..=r`.
    pub fn leftmost_min<S: RmqSource + ?Sized>(&self, src: &S, l: usize, r: usize) -> Result<usize> {
        if l > r || l == 0 {
            return Err(Error::range("range start", l, 1, r));
        }
        if r > self.len {
            return Err(Error::range("range end", r, l, self.len));
        }
        Ok(self.argmin(src, l - 1, r - 1) + 1)
    }

    pub fn size_bits(&self) -> usize {
        self.table.iter().map(|t| t.len() * 32).sum::<usize>() + 64
    }
}

#[inline]
fn better<S: RmqSource + ?Sized>(src: &S, a: u32, b: u32) -> u32 {
    let (va, vb) = (src.value(a as usize), src.value(b as usize));
    if vb < va || (vb == va && b < a) {
        b
    } else {
        a
    }
}

#[inline]
fn scan_min<S: RmqSource + ?Sized>(src: &S, lo: usize, hi: usize) -> usize {
    let mut best = lo;
    let mut bv = src.value(lo);
    for i in lo + 1..hi {
        let v = src.value(i);
        if v < bv {
            best = i;
            bv = v;
        }
    }
    best
}

impl Persist for RmqIndex {
    fn write_to(&self, w: &mut Writer) {
        w.section(b"RMQT", |w| {
            w.usize(self.len);
            w.usize(self.table.len());
            for t in &self.table {
                w.u32s(t);
            }
        });
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let mut s = r.section(b"RMQT")?;
        let len = s.usize()?;
        let levels = s.usize()?;
        if levels > 64 {
            return Err(Error::format("too many range-minimum levels"));
        }
        let mut table = Vec::with_capacity(levels);
        let nblocks = len.div_ceil(BLOCK);
        for k in 0..levels {
            let t = s.u32s()?;
            if t.len() + (1 << k) != nblocks + 1 || t.iter().any(|&x| x as usize >= len) {
                return Err(Error::format("range-minimum table shape mismatch"));
            }
            table.push(t);
        }
        s.finish("range-minimum index")?;
        if len > 0 && levels == 0 {
            return Err(Error::format("range-minimum table missing"));
        }
        Ok(Self { len, table })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(v: &[u32], l: usize, r: usize) -> usize {
        let mut best = l;
        for m in l..=r {
            if v[m - 1] < v[best - 1] {
                best = m;
            }
        }
        best
    }

    #[test]
    fn examples() {
        let v: Vec<u32> = vec![0, 0, 0, 1, 0, 4, 0, 6, 2, 3, 8];
        let rmq = RmqIndex::build(&v);
        assert_eq!(rmq.leftmost_min(&v, 4, 8).unwrap(), 5);
        let one = vec![7u32];
        assert_eq!(RmqIndex::build(&one).leftmost_min(&one, 1, 1).unwrap(), 1);
        let w = vec![3u32, 1, 1, 2];
        assert_eq!(RmqIndex::build(&w).leftmost_min(&w, 1, 4).unwrap(), 2);
        assert!(matches!(rmq.leftmost_min(&v, 5, 4), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn agrees_with_scan() {
        let mut x = 0x1234_5678_9ABC_DEF1u64;
        let mut next = move || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            x
        };
        for &n in &[1usize, 31, 32, 33, 64, 65, 500, 3000] {
            for &range in &[3u64, 1000] {
                let v: Vec<u32> = (0..n).map(|_| (next() % range) as u32).collect();
                let rmq = RmqIndex::build(&v);
                for _ in 0..2000 {
                    let a = (next() % n as u64) as usize + 1;
                    let b = (next() % n as u64) as usize + 1;
                    let (l, r) = (a.min(b), a.max(b));
                    assert_eq!(rmq.leftmost_min(&v, l, r).unwrap(), oracle(&v, l, r));
                }
                let back = RmqIndex::from_bytes(&rmq.to_bytes()).unwrap();
                assert_eq!(back, rmq);
            }
        }
    }
}
