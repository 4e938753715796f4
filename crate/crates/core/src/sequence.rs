//! Wavelet-tree sequence index: access, rank, select and partial rank over a
//! string of symbols `1..=sigma`.
//!
//! The tree is stored levelwise without pointers. Level `l` holds, for every
//! element, its `l`-th code digit, with elements ordered by the code prefix
//! above that level. A node is a contiguous range of a level and child ranges
//! are derived from the parent range with two ranks.

use crate::bits::{BitStore, BitVector};
use crate::digits::DigitVector;
use crate::error::{Error, Result};
use crate::persist::{Persist, Reader, Writer};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SequenceConfig {
    /// Bits per tree digit: arity is `2^arity_bits`, between 1 and 6.
    pub arity_bits: u32,
    /// Store each binary level in its smallest encoding instead of plain.
    pub compressed: bool,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            arity_bits: 1,
            compressed: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Level {
    Binary(BitStore),
    Digits(DigitVector),
}

impl Level {
    #[inline]
    fn get(&self, i: usize) -> u32 {
        match self {
            Level::Binary(b) => b.get(i) as u32,
            Level::Digits(d) => d.get(i),
        }
    }

    #[inline]
    fn rank(&self, d: u32, p: usize) -> usize {
        match self {
            Level::Binary(b) => {
                if d == 0 {
                    b.rank0(p)
                } else {
                    b.rank1(p)
                }
            }
            Level::Digits(v) => v.rank(d, p),
        }
    }

    /// Start of child `d` within node `[s, e)`, and the child's length.
    #[inline]
    fn child(&self, d: u32, s: usize, e: usize) -> (usize, usize) {
        match self {
            Level::Binary(b) => {
                let z = b.rank0(e) - b.rank0(s);
                if d == 0 {
                    (s, z)
                } else {
                    (s + z, e - s - z)
                }
            }
            Level::Digits(v) => {
                let (lt_s, le_s) = v.lt_le(d, s);
                let (lt_e, le_e) = v.lt_le(d, e);
                (s + lt_e - lt_s, (le_e - lt_e) - (le_s - lt_s))
            }
        }
    }

    /// Child `d` of node `[s, e)` as `(start, len)`, plus where position
    /// `p` of the node maps to, counting only digits `d` before it.
    #[inline]
    fn descend(&self, d: u32, s: usize, e: usize, p: usize) -> (usize, usize, usize) {
        match self {
            Level::Binary(b) => {
                let (rs, re, rp) = (b.rank1(s), b.rank1(e), b.rank1(p));
                let ones = re - rs;
                if d == 0 {
                    (s, e - s - ones, s + (p - s) - (rp - rs))
                } else {
                    let cs = s + (e - s - ones);
                    (cs, ones, cs + rp - rs)
                }
            }
            Level::Digits(v) => {
                let (lt_s, le_s) = v.lt_le(d, s);
                let (lt_e, le_e) = v.lt_le(d, e);
                let (lt_p, le_p) = v.lt_le(d, p);
                let cs = s + lt_e - lt_s;
                (cs, (le_e - lt_e) - (le_s - lt_s), cs + (le_p - lt_p) - (le_s - lt_s))
            }
        }
    }

    #[inline]
    fn select(&self, d: u32, r: usize) -> Option<usize> {
        match self {
            Level::Binary(b) => {
                if d == 0 {
                    b.select0(r)
                } else {
                    b.select1(r)
                }
            }
            Level::Digits(v) => v.select(d, r),
        }
    }

    fn size_bits(&self) -> usize {
        match self {
            Level::Binary(b) => b.size_bits(),
            Level::Digits(d) => d.size_bits(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveletSequence {
    n: usize,
    sigma: u32,
    config: SequenceConfig,
    levels: Vec<Level>,
    counts: Vec<u32>,
    entropy_h0: f64,
}

/// Number of digits of `bits_per_digit` bits needed to code `sigma` symbols.
fn depth_for(sigma: u32, bits_per_digit: u32) -> usize {
    let code_bits = if sigma <= 1 { 0 } else { (sigma - 1).ilog2() + 1 };
    code_bits.div_ceil(bits_per_digit) as usize
}

impl WaveletSequence {
    /// Builds over `symbols`, each in `1..=sigma`.
    pub fn build(symbols: &[u32], sigma: u32, config: SequenceConfig) -> Result<Self> {
        if !(1..=6).contains(&config.arity_bits) {
            return Err(Error::Config(format!(
                "arity bits must be in 1..=6, got {}",
                config.arity_bits
            )));
        }
        if sigma == 0 {
            return Err(Error::domain("alphabet", "sigma must be at least 1"));
        }
        if symbols.len() >= u32::MAX as usize {
            return Err(Error::Config("sequences are limited to 2^32 - 2 symbols".into()));
        }
        let mut counts = vec![0u32; sigma as usize];
        for (k, &a) in symbols.iter().enumerate() {
            if a == 0 || a > sigma {
                return Err(Error::domain(
                    "symbol",
                    format!("{a} at position {} outside 1..={sigma}", k + 1),
                ));
            }
            counts[a as usize - 1] += 1;
        }
        let n = symbols.len();
        let entropy_h0 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n as f64;
                -p * p.log2()
            })
            .sum::<f64>();

        let c = config.arity_bits;
        let depth = depth_for(sigma, c);
        let digit_mask = (1u32 << c) - 1;
        let mut cur: Vec<u32> = symbols.iter().map(|&a| a - 1).collect();
        let mut levels = Vec::with_capacity(depth);
        for l in 0..depth {
            let shift = (depth - 1 - l) as u32 * c;
            let level = if c == 1 {
                let bv = BitVector::from_bits(cur.iter().map(|&x| (x >> shift) & 1 == 1));
                Level::Binary(if config.compressed {
                    BitStore::smallest(bv).with_select_support()
                } else {
                    BitStore::plain(bv)
                })
            } else {
                let digits: Vec<u8> = cur.iter().map(|&x| ((x >> shift) & digit_mask) as u8).collect();
                Level::Digits(DigitVector::new(&digits, c))
            };
            levels.push(level);
            // stable: elements stay ordered by the longer prefix
            cur.sort_by_key(|&x| x >> shift);
        }
        Ok(Self {
            n,
            sigma,
            config,
            levels,
            counts,
            entropy_h0,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    pub fn config(&self) -> SequenceConfig {
        self.config
    }

    pub fn entropy_h0(&self) -> f64 {
        self.entropy_h0
    }

    /// Occurrences of `a` in the whole sequence.
    pub fn count(&self, a: u32) -> usize {
        self.counts[a as usize - 1] as usize
    }

    fn digit(&self, code: u32, l: usize) -> u32 {
        let c = self.config.arity_bits;
        let shift = (self.levels.len() - 1 - l) as u32 * c;
        (code >> shift) & ((1 << c) - 1)
    }

    /// Symbol at 1-based position `k` together with its partial rank. One
    /// root-to-leaf descent computes both.
    #[inline]
    pub fn access_rank(&self, k: usize) -> (u32, usize) {
        debug_assert!(k >= 1 && k <= self.n);
        let (mut s, mut e, mut p) = (0usize, self.n, k - 1);
        let mut code = 0u32;
        let c = self.config.arity_bits;
        for level in &self.levels {
            let d = level.get(p);
            let (cs, clen, np) = level.descend(d, s, e, p);
            p = np;
            s = cs;
            e = cs + clen;
            code = (code << c) | d;
        }
        (code + 1, p - s + 1)
    }

    /// Occurrences of `a` among the first `k` positions.
    #[inline]
    pub fn rank_unchecked(&self, a: u32, k: usize) -> usize {
        debug_assert!(a >= 1 && a <= self.sigma && k <= self.n);
        let code = a - 1;
        let (mut s, mut e, mut p) = (0usize, self.n, k);
        for (l, level) in self.levels.iter().enumerate() {
            let d = self.digit(code, l);
            let (cs, clen, np) = level.descend(d, s, e, p);
            p = np;
            s = cs;
            e = cs + clen;
            if s == e {
                return 0;
            }
        }
        p - s
    }

    /// Position of the `r`-th occurrence of `a`, or `None` past the last.
    pub fn select_unchecked(&self, a: u32, r: usize) -> Option<usize> {
        debug_assert!(a >= 1 && a <= self.sigma);
        if r == 0 || r > self.counts[a as usize - 1] as usize {
            return None;
        }
        let code = a - 1;
        let depth = self.levels.len();
        // parent start and child start at each level of the descent
        let mut starts = [(0usize, 0usize); 32];
        let (mut s, mut e) = (0usize, self.n);
        for (l, level) in self.levels.iter().enumerate() {
            let d = self.digit(code, l);
            let (cs, clen) = level.child(d, s, e);
            starts[l] = (s, cs);
            s = cs;
            e = cs + clen;
        }
        let mut pos = s + r - 1;
        for l in (0..depth).rev() {
            let level = &self.levels[l];
            let d = self.digit(code, l);
            let (ps, cs) = starts[l];
            let nth = level.rank(d, ps) + (pos - cs) + 1;
            pos = level.select(d, nth)? - 1;
        }
        Some(pos + 1)
    }

    fn check_pos(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n {
            return Err(Error::range("position", k, 1, self.n));
        }
        Ok(())
    }

    fn check_symbol(&self, a: u32) -> Result<()> {
        if a == 0 || a > self.sigma {
            return Err(Error::domain("symbol", format!("{a} outside 1..={}", self.sigma)));
        }
        Ok(())
    }

    pub fn access(&self, k: usize) -> Result<u32> {
        self.check_pos(k)?;
        Ok(self.access_rank(k).0)
    }

    pub fn rank(&self, a: u32, k: usize) -> Result<usize> {
        self.check_symbol(a)?;
        if k > self.n {
            return Err(Error::range("rank position", k, 0, self.n));
        }
        Ok(self.rank_unchecked(a, k))
    }

    pub fn select(&self, a: u32, r: usize) -> Result<Option<usize>> {
        self.check_symbol(a)?;
        Ok(self.select_unchecked(a, r))
    }

    /// `rank_{S[k]}(k)`, computed on the access path without a separate
    /// rank traversal.
    pub fn partial_rank(&self, k: usize) -> Result<usize> {
        self.check_pos(k)?;
        Ok(self.access_rank(k).1)
    }

    /// Position of the previous occurrence of `S[k]`, or 0.
    pub fn c_value(&self, k: usize) -> Result<usize> {
        self.check_pos(k)?;
        Ok(self.c_value_unchecked(k))
    }

    #[inline]
    pub fn c_value_unchecked(&self, k: usize) -> usize {
        let (a, r) = self.access_rank(k);
        if r == 1 {
            0
        } else {
            self.select_unchecked(a, r - 1).unwrap()
        }
    }

    /// Decodes the whole sequence.
    pub fn to_vec(&self) -> Vec<u32> {
        (1..=self.n).map(|k| self.access_rank(k).0).collect()
    }

    pub fn size_bits(&self) -> usize {
        self.levels.iter().map(Level::size_bits).sum::<usize>() + self.counts.len() * 32 + 6 * 64
    }

    /// Bits of each level, for the space report.
    pub fn level_bits(&self) -> Vec<usize> {
        self.levels.iter().map(Level::size_bits).collect()
    }
}

impl Persist for WaveletSequence {
    fn write_to(&self, w: &mut Writer) {
        w.section(b"WSEQ", |w| {
            w.usize(self.n);
            w.u32(self.sigma);
            w.u32(self.config.arity_bits);
            w.u8(self.config.compressed as u8);
            w.f64(self.entropy_h0);
            w.u32s(&self.counts);
            w.usize(self.levels.len());
            for level in &self.levels {
                match level {
                    Level::Binary(b) => {
                        w.u8(0);
                        b.write_to(w);
                    }
                    Level::Digits(d) => {
                        w.u8(1);
                        d.write_to(w);
                    }
                }
            }
        });
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let mut s = r.section(b"WSEQ")?;
        let n = s.usize()?;
        let sigma = s.u32()?;
        let arity_bits = s.u32()?;
        let compressed = s.u8()? != 0;
        let entropy_h0 = s.f64()?;
        let counts = s.u32s()?;
        let nlevels = s.usize()?;
        if !(1..=6).contains(&arity_bits)
            || sigma == 0
            || counts.len() != sigma as usize
            || nlevels != depth_for(sigma, arity_bits)
            || counts.iter().map(|&c| c as usize).sum::<usize>() != n
        {
            return Err(Error::format("sequence header is inconsistent"));
        }
        let mut levels = Vec::with_capacity(nlevels);
        for _ in 0..nlevels {
            let level = match s.u8()? {
                0 if arity_bits == 1 => Level::Binary(BitStore::read_from(&mut s)?),
                1 if arity_bits > 1 => Level::Digits(DigitVector::read_from(&mut s)?),
                k => return Err(Error::format(format!("unexpected level kind {k}"))),
            };
            let len = match &level {
                Level::Binary(b) => b.len(),
                Level::Digits(d) => d.len(),
            };
            if len != n {
                return Err(Error::format("level length does not match sequence"));
            }
            levels.push(level);
        }
        s.finish("sequence")?;
        Ok(Self {
            n,
            sigma,
            config: SequenceConfig {
                arity_bits,
                compressed,
            },
            levels,
            counts,
            entropy_h0,
        })
    }
}
