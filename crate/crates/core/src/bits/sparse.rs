//! Elias-Fano encoded bitvector for sparse flag sets.

use super::bitvec::{read_header, BitVector, BITS_MAGIC, BITS_VERSION};
use super::intvec::IntVector;
use crate::error::{Error, Result};
use crate::persist::{Persist, Reader, Writer};

/// Zeros between entries of the select0 directory.
const ZERO_SAMPLE: usize = 1024;

/// Stores the positions of the ones as a monotone sequence split into
/// `low_bits` explicit low bits and unary-coded high parts.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SparseBitVector {
    len: usize,
    ones: usize,
    low_bits: u32,
    lows: IntVector,
    highs: BitVector,
    /// Ones before the `(s * ZERO_SAMPLE + 1)`-th zero; empty unless
    /// requested. Rebuilt on load.
    zero_samples: IntVector,
}

impl SparseBitVector {
    /// Builds from strictly increasing 0-based positions, all `< len`.
    pub fn from_positions(len: usize, positions: &[usize]) -> Self {
        let ones = positions.len();
        let low_bits = if len <= ones { 0 } else { (len / ones.max(1)).ilog2() };
        let mut lows = IntVector::new(ones, low_bits);
        let hlen = ones + (len >> low_bits) + 1;
        let mut high_idx = Vec::with_capacity(ones);
        let mut prev = None;
        for (k, &p) in positions.iter().enumerate() {
            assert!(p < len, "position {p} outside length {len}");
            assert!(prev.is_none_or(|q| q < p), "positions must be strictly increasing");
            prev = Some(p);
            if low_bits > 0 {
                lows.set(k, (p & ((1 << low_bits) - 1)) as u64);
            }
            high_idx.push((p >> low_bits) + k);
        }
        Self {
            len,
            ones,
            low_bits,
            lows,
            highs: BitVector::from_indices(hlen, high_idx),
            zero_samples: IntVector::default(),
        }
    }

    /// Adds a sampled directory that narrows the search in
    /// [`Self::select0`], at about `lg(ones) / 1024` bits per zero.
    pub fn with_select0_directory(mut self) -> Self {
        let positions: Vec<usize> = (0..self.ones).map(|k| self.value(k)).collect();
        self.zero_samples = zero_directory(self.len, &positions);
        self
    }

    pub fn has_select0_directory(&self) -> bool {
        !self.zero_samples.is_empty()
    }

    pub fn from_bitvector(bv: &BitVector) -> Self {
        let pos: Vec<usize> = bv.ones_in(0, bv.len()).collect();
        Self::from_positions(bv.len(), &pos)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.ones
    }

    /// 0-based position of the `k`-th one, `k` counted from 0.
    #[inline]
    fn value(&self, k: usize) -> usize {
        let high = self.highs.select1(k + 1).unwrap() - 1 - k;
        (high << self.low_bits) | self.lows.get(k) as usize
    }

    pub fn rank1(&self, p: usize) -> usize {
        assert!(p <= self.len, "rank position {p} beyond length {}", self.len);
        if self.ones == 0 {
            return 0;
        }
        let hp = p >> self.low_bits;
        let pl = (p & ((1usize << self.low_bits) - 1)) as u64;
        let (mut count, mut pos) = if hp == 0 {
            (0, 0)
        } else {
            let z = self.highs.select0(hp).unwrap();
            (z - hp, z)
        };
        while pos < self.highs.len() && self.highs.get(pos) && self.lows.get(count) < pl {
            count += 1;
            pos += 1;
        }
        count
    }

    pub fn rank0(&self, p: usize) -> usize {
        p - self.rank1(p)
    }

    pub fn get(&self, idx: usize) -> bool {
        assert!(idx < self.len);
        let c = self.rank1(idx);
        c < self.ones && self.value(c) == idx
    }

    /// 1-based position of the `r`-th one.
    pub fn select1(&self, r: usize) -> Option<usize> {
        if r == 0 || r > self.ones {
            return None;
        }
        Some(self.value(r - 1) + 1)
    }

    /// 1-based position of the `r`-th zero.
    pub fn select0(&self, r: usize) -> Option<usize> {
        if r == 0 || r > self.len - self.ones {
            return None;
        }
        // zeros before the k-th one is value(k) - k, which never decreases
        let (mut lo, mut hi) = (0, self.ones);
        if self.has_select0_directory() {
            let s = (r - 1) / ZERO_SAMPLE;
            lo = self.zero_samples.get(s) as usize;
            if s + 1 < self.zero_samples.len() {
                hi = self.zero_samples.get(s + 1) as usize;
            }
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.value(mid) - mid < r {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Some(r + lo)
    }

    /// 0-based positions of the ones in `[from, to)`.
    pub fn ones_in(&self, from: usize, to: usize) -> impl Iterator<Item = usize> + '_ {
        let to = to.min(self.len);
        let start = if from < to { self.rank1(from) } else { self.ones };
        (start..self.ones)
            .map(move |k| self.value(k))
            .take_while(move |&p| p < to)
    }

    /// Payload bits: explicit lows plus unary highs, excluding the rank and
    /// select directories of the high part.
    pub fn payload_bits(&self) -> usize {
        self.ones * self.low_bits as usize + self.highs.len()
    }

    pub fn size_bits(&self) -> usize {
        self.lows.size_bits() + self.highs.size_bits() + self.zero_samples.size_bits() + 3 * 64
    }
}

fn zero_directory(len: usize, positions: &[usize]) -> IntVector {
    let zeros = len - positions.len();
    let mut out: Vec<u64> = Vec::with_capacity(zeros.div_ceil(ZERO_SAMPLE));
    let mut k = 0;
    for r in (1..=zeros).step_by(ZERO_SAMPLE) {
        while k < positions.len() && positions[k] - k < r {
            k += 1;
        }
        out.push(k as u64);
    }
    IntVector::from_slice_min_width(&out)
}

impl Persist for SparseBitVector {
    fn write_to(&self, w: &mut Writer) {
        w.bytes(BITS_MAGIC);
        w.u16(BITS_VERSION);
        w.u8(1);
        w.section(b"EFHD", |w| {
            w.usize(self.len);
            w.usize(self.ones);
            w.u32(self.low_bits);
            w.u8(self.has_select0_directory() as u8);
        });
        self.lows.write_to(w);
        self.highs.write_to(w);
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        read_header(r, 1)?;
        let mut h = r.section(b"EFHD")?;
        let len = h.usize()?;
        let ones = h.usize()?;
        let low_bits = h.u32()?;
        let directory = h.u8()? == 1;
        h.finish("sparse header")?;
        let lows = IntVector::read_from(r)?;
        let highs = BitVector::read_from(r)?;
        if lows.len() != ones
            || lows.width() != low_bits
            || highs.count_ones() != ones
            || ones > len
            || highs.len() != ones + (len >> low_bits) + 1
        {
            return Err(Error::format("inconsistent sparse bitvector"));
        }
        let v = Self {
            len,
            ones,
            low_bits,
            lows,
            highs,
            zero_samples: IntVector::default(),
        };
        Ok(if directory { v.with_select0_directory() } else { v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_plain_on_same_content() {
        let mut x = 88172645463325252u64;
        for &(n, per_mille) in &[(4000usize, 1u64), (4000, 100), (3000, 500), (2500, 990), (1, 0), (1, 1000)] {
            let mut pos = Vec::new();
            for i in 0..n {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                if x % 1000 < per_mille {
                    pos.push(i);
                }
            }
            let plain = BitVector::from_indices(n, pos.iter().copied());
            let ef = SparseBitVector::from_positions(n, &pos);
            for p in 0..=n {
                assert_eq!(ef.rank1(p), plain.rank1(p), "rank {p}");
            }
            for r in 0..=plain.count_ones() + 1 {
                assert_eq!(ef.select1(r), plain.select1(r));
            }
            for r in 0..=plain.count_zeros() + 1 {
                assert_eq!(ef.select0(r), plain.select0(r));
            }
            let a: Vec<_> = ef.ones_in(n / 3, n).collect();
            let b: Vec<_> = plain.ones_in(n / 3, n).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn select0_directory_changes_only_speed() {
        let n = 50_000;
        let pos: Vec<usize> = (0..n).filter(|i| i % 3 != 0 || i % 7 == 0).collect();
        let bare = SparseBitVector::from_positions(n, &pos);
        let fast = bare.clone().with_select0_directory();
        assert!(fast.has_select0_directory() && !bare.has_select0_directory());
        for r in 0..=bare.len() - bare.count_ones() + 1 {
            assert_eq!(fast.select0(r), bare.select0(r), "select0 {r}");
        }
        let back = SparseBitVector::from_bytes(&fast.to_bytes()).unwrap();
        assert_eq!(back, fast);
    }

    #[test]
    fn payload_within_bound() {
        let n = 100_000;
        let pos: Vec<usize> = (0..n).filter(|i| i % 97 == 5).collect();
        let ef = SparseBitVector::from_positions(n, &pos);
        let m = pos.len();
        let bound = m * (2 + (n as f64 / m as f64).log2().ceil() as usize) + 128;
        assert!(ef.payload_bits() <= bound, "{} > {bound}", ef.payload_bits());
    }

    #[test]
    fn round_trip() {
        let ef = SparseBitVector::from_positions(1000, &[3, 10, 999]);
        let bytes = ef.to_bytes();
        let back = SparseBitVector::from_bytes(&bytes).unwrap();
        assert_eq!(back, ef);
        assert_eq!(back.to_bytes(), bytes);
        assert!(BitVector::from_bytes(&bytes).is_err());
    }
}
