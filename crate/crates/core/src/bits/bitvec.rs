//! Plain bitvector with a rank directory and sampled select.
//!
//! Positions follow one convention throughout this module:
//! `rank1(p)` counts the ones among the first `p` bits, and `select1(r)`
//! returns the 1-based position of the `r`-th one, which is also the prefix
//! length whose rank is `r`. `get` takes a 0-based index.

use crate::error::{Error, Result};
use crate::persist::{Persist, Reader, Writer};

pub(crate) const SUPER_BITS: usize = 512;
const WORDS_PER_SUPER: usize = SUPER_BITS / 64;
pub(crate) const SELECT_SAMPLE: usize = 4096;

/// Format version for serialized bitvectors.
pub const BITS_VERSION: u16 = 1;
pub(crate) const BITS_MAGIC: &[u8; 4] = b"RFQB";

/// Position (0-based) of the `r`-th set bit of `w`, `r` counted from 1.
#[inline]
pub(crate) fn select_in_word(mut w: u64, r: u32) -> u32 {
    debug_assert!(r >= 1 && r <= w.count_ones());
    let mut base = 0u32;
    let mut r = r;
    // skip whole bytes first
    loop {
        let c = (w & 0xFF).count_ones();
        if c >= r {
            break;
        }
        r -= c;
        w >>= 8;
        base += 8;
    }
    for _ in 1..r {
        w &= w - 1;
    }
    base + w.trailing_zeros()
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct BitVector {
    len: usize,
    ones: usize,
    words: Vec<u64>,
    /// Ones before each 512-bit superblock; one trailing entry holds the
    /// total.
    super_ranks: Vec<u32>,
    /// Superblock holding the `(k * SELECT_SAMPLE + 1)`-th one.
    select1_samples: Vec<u32>,
    /// Same for zeros.
    select0_samples: Vec<u32>,
}

impl BitVector {
    /// Builds from raw words; bits at or beyond `len` are cleared.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        assert!(
            len < u32::MAX as usize,
            "bitvectors are limited to 2^32 - 1 bits"
        );
        words.resize(len.div_ceil(64), 0);
        if !len.is_multiple_of(64) {
            let last = words.len() - 1;
            words[last] &= (1u64 << (len % 64)) - 1;
        }
        let mut bv = Self {
            len,
            ones: 0,
            words,
            super_ranks: Vec::new(),
            select1_samples: Vec::new(),
            select0_samples: Vec::new(),
        };
        bv.build_directory();
        bv
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut b = BitVectorBuilder::new();
        for bit in bits {
            b.push(bit);
        }
        b.finish()
    }

    /// Parses a string of `0`/`1` characters, ignoring anything else.
    pub fn from_bit_str(s: &str) -> Self {
        Self::from_bits(s.chars().filter_map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        }))
    }

    /// Bitvector of length `len` with ones at the given 0-based indices.
    pub fn from_indices(len: usize, ones: impl IntoIterator<Item = usize>) -> Self {
        let mut words = vec![0u64; len.div_ceil(64)];
        for i in ones {
            assert!(i < len, "index {i} out of bitvector of length {len}");
            words[i / 64] |= 1 << (i % 64);
        }
        Self::from_words(words, len)
    }

    fn build_directory(&mut self) {
        let nsb = self.len.div_ceil(SUPER_BITS);
        let mut super_ranks = Vec::with_capacity(nsb + 1);
        let mut acc = 0usize;
        for sb in 0..nsb {
            super_ranks.push(acc as u32);
            let lo = sb * WORDS_PER_SUPER;
            let hi = (lo + WORDS_PER_SUPER).min(self.words.len());
            acc += self.words[lo..hi]
                .iter()
                .map(|w| w.count_ones() as usize)
                .sum::<usize>();
        }
        super_ranks.push(acc as u32);
        self.ones = acc;

        let mut s1 = Vec::with_capacity(acc / SELECT_SAMPLE + 1);
        let mut s0 = Vec::with_capacity((self.len - acc) / SELECT_SAMPLE + 1);
        let (mut next1, mut next0) = (1usize, 1usize);
        for sb in 0..nsb {
            let ones_end = super_ranks[sb + 1] as usize;
            let zeros_end = ((sb + 1) * SUPER_BITS).min(self.len) - ones_end;
            while next1 <= ones_end {
                s1.push(sb as u32);
                next1 += SELECT_SAMPLE;
            }
            while next0 <= zeros_end {
                s0.push(sb as u32);
                next0 += SELECT_SAMPLE;
            }
        }
        self.super_ranks = super_ranks;
        self.select1_samples = s1;
        self.select0_samples = s0;
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

    pub fn count_zeros(&self) -> usize {
        self.len - self.ones
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        assert!(idx < self.len, "bit index {idx} out of {}", self.len);
        self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    /// Number of ones among the first `p` bits. Panics if `p > len`.
    #[inline]
    pub fn rank1(&self, p: usize) -> usize {
        assert!(p <= self.len, "rank position {p} beyond length {}", self.len);
        let sb = p / SUPER_BITS;
        let mut r = self.super_ranks[sb] as usize;
        let end = p / 64;
        for w in &self.words[sb * WORDS_PER_SUPER..end] {
            r += w.count_ones() as usize;
        }
        if !p.is_multiple_of(64) {
            r += (self.words[end] & ((1u64 << (p % 64)) - 1)).count_ones() as usize;
        }
        r
    }

    #[inline]
    pub fn rank0(&self, p: usize) -> usize {
        p - self.rank1(p)
    }

    pub fn checked_rank1(&self, p: usize) -> Result<usize> {
        if p > self.len {
            return Err(Error::range("rank position", p, 0, self.len));
        }
        Ok(self.rank1(p))
    }

    /// 1-based position of the `r`-th one, or `None` when `r` is zero or
    /// exceeds the number of ones.
    pub fn select1(&self, r: usize) -> Option<usize> {
        if r == 0 || r > self.ones {
            return None;
        }
        let s = (r - 1) / SELECT_SAMPLE;
        let lo = self.select1_samples[s] as usize;
        let hi = self
            .select1_samples
            .get(s + 1)
            .map_or(self.super_ranks.len() - 2, |&x| x as usize);
        // last superblock in [lo, hi] with fewer than r ones before it
        let sb = lo + self.super_ranks[lo + 1..=hi].partition_point(|&x| (x as usize) < r);
        let mut rem = r - self.super_ranks[sb] as usize;
        let mut wi = sb * WORDS_PER_SUPER;
        loop {
            let c = self.words[wi].count_ones() as usize;
            if rem <= c {
                return Some(wi * 64 + select_in_word(self.words[wi], rem as u32) as usize + 1);
            }
            rem -= c;
            wi += 1;
        }
    }

    /// 1-based position of the `r`-th zero.
    pub fn select0(&self, r: usize) -> Option<usize> {
        if r == 0 || r > self.len - self.ones {
            return None;
        }
        let zeros_before = |sb: usize| sb * SUPER_BITS - self.super_ranks[sb] as usize;
        let s = (r - 1) / SELECT_SAMPLE;
        let lo = self.select0_samples[s] as usize;
        let hi = self
            .select0_samples
            .get(s + 1)
            .map_or(self.super_ranks.len() - 2, |&x| x as usize);
        let mut a = lo;
        let mut b = hi;
        while a < b {
            let mid = (a + b).div_ceil(2);
            if zeros_before(mid) < r {
                a = mid;
            } else {
                b = mid - 1;
            }
        }
        let sb = a;
        let mut rem = r - zeros_before(sb);
        let mut wi = sb * WORDS_PER_SUPER;
        loop {
            let w = !self.words[wi];
            let c = w.count_ones() as usize;
            if rem <= c {
                return Some(wi * 64 + select_in_word(w, rem as u32) as usize + 1);
            }
            rem -= c;
            wi += 1;
        }
    }

    pub fn checked_select1(&self, r: usize) -> Result<usize> {
        if r == 0 {
            return Err(Error::range("select rank", r, 1, self.ones.max(1)));
        }
        self.select1(r).ok_or(Error::NotFound {
            rank: r,
            available: self.ones,
        })
    }

    /// Iterates the 0-based indices of the ones in `[from, to)`.
    pub fn ones_in(&self, from: usize, to: usize) -> impl Iterator<Item = usize> + '_ {
        let to = to.min(self.len);
        let mut wi = from / 64;
        let mut cur = if from < to {
            self.words[wi] & (u64::MAX << (from % 64))
        } else {
            0
        };
        let last_word = if to == 0 { 0 } else { (to - 1) / 64 };
        std::iter::from_fn(move || loop {
            if from >= to {
                return None;
            }
            if cur != 0 {
                let idx = wi * 64 + cur.trailing_zeros() as usize;
                cur &= cur - 1;
                return if idx < to { Some(idx) } else { None };
            }
            if wi >= last_word {
                return None;
            }
            wi += 1;
            cur = self.words[wi];
        })
    }

    /// Bits used by the payload and directories.
    pub fn size_bits(&self) -> usize {
        self.words.len() * 64
            + self.super_ranks.len() * 32
            + (self.select1_samples.len() + self.select0_samples.len()) * 32
            + 3 * 64
    }
}

impl Persist for BitVector {
    fn write_to(&self, w: &mut Writer) {
        w.bytes(BITS_MAGIC);
        w.u16(BITS_VERSION);
        w.u8(0);
        w.section(b"BITS", |w| {
            w.usize(self.len);
            w.u64s(&self.words);
        });
        w.section(b"RANK", |w| w.u32s(&self.super_ranks));
        w.section(b"SEL1", |w| w.u32s(&self.select1_samples));
        w.section(b"SEL0", |w| w.u32s(&self.select0_samples));
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        read_header(r, 0)?;
        let mut s = r.section(b"BITS")?;
        let len = s.usize()?;
        let words = s.u64s()?;
        s.finish("bits")?;
        let super_ranks = r.section(b"RANK")?.u32s()?;
        let select1_samples = r.section(b"SEL1")?.u32s()?;
        let select0_samples = r.section(b"SEL0")?.u32s()?;
        if words.len() != len.div_ceil(64) || len >= u32::MAX as usize {
            return Err(Error::format("bitvector word count does not match length"));
        }
        let rebuilt = BitVector::from_words(words, len);
        // directories are stored for a bit-exact layout; they must agree
        // with the payload they index
        if rebuilt.super_ranks != super_ranks
            || rebuilt.select1_samples != select1_samples
            || rebuilt.select0_samples != select0_samples
        {
            return Err(Error::format("bitvector directory does not match payload"));
        }
        Ok(rebuilt)
    }
}

pub(crate) fn read_header(r: &mut Reader<'_>, kind: u8) -> Result<()> {
    r.expect_bytes(BITS_MAGIC, "bitvector magic")?;
    let v = r.u16()?;
    if v != BITS_VERSION {
        return Err(Error::Version {
            found: v,
            expected: BITS_VERSION,
        });
    }
    let k = r.u8()?;
    if k != kind {
        return Err(Error::format(format!("bitvector kind {k}, expected {kind}")));
    }
    Ok(())
}

#[derive(Debug, Default)]
pub struct BitVectorBuilder {
    words: Vec<u64>,
    len: usize,
}

impl BitVectorBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_len(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if bit {
            self.words[self.len / 64] |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    pub fn set(&mut self, idx: usize, bit: bool) {
        assert!(idx < self.len);
        if bit {
            self.words[idx / 64] |= 1 << (idx % 64);
        } else {
            self.words[idx / 64] &= !(1 << (idx % 64));
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn finish(self) -> BitVector {
        BitVector::from_words(self.words, self.len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scan_rank(bits: &[bool], p: usize) -> usize {
        bits[..p].iter().filter(|&&b| b).count()
    }

    fn scan_select(bits: &[bool], r: usize, want: bool) -> Option<usize> {
        bits.iter()
            .enumerate()
            .filter(|(_, &b)| b == want)
            .nth(r.checked_sub(1)?)
            .map(|(i, _)| i + 1)
    }

    #[test]
    fn small_examples() {
        let bv = BitVector::from_bit_str("10110");
        assert_eq!(bv.rank1(0), 0);
        assert_eq!(bv.rank1(5), 3);
        assert_eq!(bv.rank1(3), 2);
        assert_eq!(bv.select1(1), Some(1));
        assert_eq!(bv.select1(3), Some(4));
        assert_eq!(BitVector::from_bit_str("00001").select1(1), Some(5));
        assert_eq!(bv.select0(2), Some(5));
    }

    #[test]
    fn errors_are_distinct() {
        let bv = BitVector::from_bit_str("10110");
        assert!(matches!(bv.checked_rank1(6), Err(Error::OutOfRange { .. })));
        assert!(matches!(
            bv.checked_select1(4),
            Err(Error::NotFound { rank: 4, available: 3 })
        ));
        assert!(matches!(bv.checked_select1(0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn select_in_word_matches_scan() {
        let w = 0xF0F0_0000_8001_0013u64;
        let positions: Vec<u32> = (0..64).filter(|i| w >> i & 1 == 1).collect();
        for (k, &p) in positions.iter().enumerate() {
            assert_eq!(select_in_word(w, k as u32 + 1), p);
        }
    }

    #[test]
    fn agrees_with_scan_across_superblocks() {
        let mut x = 0x2545_F491_4F6C_DD1Du64;
        for &(n, density) in &[(3000usize, 0.5f64), (5000, 0.01), (4099, 0.99), (70, 0.3)] {
            let bits: Vec<bool> = (0..n)
                .map(|_| {
                    x ^= x << 13;
                    x ^= x >> 7;
                    x ^= x << 17;
                    (x % 10_000) as f64 / 10_000.0 < density
                })
                .collect();
            let bv = BitVector::from_bits(bits.iter().copied());
            for p in 0..=n {
                assert_eq!(bv.rank1(p), scan_rank(&bits, p));
            }
            for r in 0..=bv.count_ones() + 1 {
                assert_eq!(bv.select1(r), scan_select(&bits, r, true), "select1 {r}");
            }
            for r in 0..=bv.count_zeros() + 1 {
                assert_eq!(bv.select0(r), scan_select(&bits, r, false), "select0 {r}");
            }
            let ones: Vec<usize> = bv.ones_in(17, n - 3).collect();
            let want: Vec<usize> = (17..n - 3).filter(|&i| bits[i]).collect();
            assert_eq!(ones, want);
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let bv = BitVector::from_indices(1500, (0..1500).filter(|i| i % 7 == 3));
        let bytes = bv.to_bytes();
        assert_eq!(&bytes[..4], b"RFQB");
        let back = BitVector::from_bytes(&bytes).unwrap();
        assert_eq!(back, bv);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn tampered_directory_is_rejected() {
        let bv = BitVector::from_indices(600, [1, 5, 599]);
        let mut bytes = bv.to_bytes();
        let n = bytes.len();
        // last byte belongs to the final select0 sample
        bytes[n - 1] ^= 1;
        assert!(BitVector::from_bytes(&bytes).is_err());
    }
}
