//! Word-parallel frequency counting for tiny alphabets.
//!
//! A chunk of `k = sigma'` symbols is copied `sigma'` times into one wide
//! register, copy `i` is compared against symbol `i` in every field at once,
//! the per-field equality flags are summed by a spreading multiplication, and
//! the sums are accumulated into one counter field per symbol. Thresholds are
//! applied by adding a bias that makes counters reaching the threshold carry
//! into a dedicated overflow bit.
//!
//! Symbol fields carry one guard bit above the symbol code so that a field
//! can also hold a count of up to `k`. Registers wider than 64 bits are
//! emulated by a fixed array of words.

use crate::error::{Error, Result};

const MAX_WORDS: usize = 40;
/// Largest supported alphabet.
pub const MAX_SIGMA: u32 = 16;

/// Little-endian multiword register of a fixed bit width.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Wide {
    w: [u64; MAX_WORDS],
    len: usize,
}

impl std::fmt::Debug for Wide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Wide(")?;
        for x in self.w[..self.len].iter().rev() {
            write!(f, "{x:016x}")?;
        }
        write!(f, ")")
    }
}

impl Wide {
    fn zero(len: usize) -> Self {
        assert!(len <= MAX_WORDS);
        Self {
            w: [0; MAX_WORDS],
            len,
        }
    }

    fn set_bit(&mut self, bit: usize) {
        self.w[bit / 64] |= 1 << (bit % 64);
    }

    /// ORs `v` (at most 64 bits) at bit offset `at`.
    fn or_at(&mut self, at: usize, v: u64) {
        if v == 0 {
            return;
        }
        self.w[at / 64] |= v << (at % 64);
        if !at.is_multiple_of(64) && at / 64 + 1 < self.len {
            self.w[at / 64 + 1] |= v >> (64 - at % 64);
        }
    }

    /// Reads `width <= 64` bits starting at `at`.
    fn field(&self, at: usize, width: usize) -> u64 {
        let mut v = self.w[at / 64] >> (at % 64);
        if !at.is_multiple_of(64) && at / 64 + 1 < self.len {
            v |= self.w[at / 64 + 1] << (64 - at % 64);
        }
        if width == 64 {
            v
        } else {
            v & ((1 << width) - 1)
        }
    }

    fn and(&self, o: &Wide) -> Wide {
        let mut r = *self;
        for i in 0..self.len {
            r.w[i] &= o.w[i];
        }
        r
    }

    fn xor(&self, o: &Wide) -> Wide {
        let mut r = *self;
        for i in 0..self.len {
            r.w[i] ^= o.w[i];
        }
        r
    }

    fn not(&self) -> Wide {
        let mut r = *self;
        for i in 0..self.len {
            r.w[i] = !r.w[i];
        }
        r
    }

    fn add(&self, o: &Wide) -> Wide {
        let mut r = *self;
        let mut carry = false;
        for i in 0..self.len {
            let (s1, c1) = self.w[i].overflowing_add(o.w[i]);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            r.w[i] = s2;
            carry = c1 || c2;
        }
        r
    }

    fn sub(&self, o: &Wide) -> Wide {
        let mut r = *self;
        let mut borrow = false;
        for i in 0..self.len {
            let (d1, b1) = self.w[i].overflowing_sub(o.w[i]);
            let (d2, b2) = d1.overflowing_sub(borrow as u64);
            r.w[i] = d2;
            borrow = b1 || b2;
        }
        r
    }

    fn shl(&self, s: usize) -> Wide {
        let mut r = Wide::zero(self.len);
        let (ws, bs) = (s / 64, s % 64);
        for i in (ws..self.len).rev() {
            let mut v = self.w[i - ws] << bs;
            if bs != 0 && i > ws {
                v |= self.w[i - ws - 1] >> (64 - bs);
            }
            r.w[i] = v;
        }
        r
    }

    fn shr(&self, s: usize) -> Wide {
        let mut r = Wide::zero(self.len);
        let (ws, bs) = (s / 64, s % 64);
        for i in 0..self.len.saturating_sub(ws) {
            let mut v = self.w[i + ws] >> bs;
            if bs != 0 && i + ws + 1 < self.len {
                v |= self.w[i + ws + 1] << (64 - bs);
            }
            r.w[i] = v;
        }
        r
    }

    /// Set bit positions, lowest first, by repeated lowest-set-bit removal.
    fn ones(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for i in 0..self.len {
            let mut x = self.w[i];
            while x != 0 {
                // isolate the lowest set bit as (x xor (x - 1)) and x
                let low = (x ^ (x - 1)) & x;
                out.push(i * 64 + low.trailing_zeros() as usize);
                x ^= low;
            }
        }
        out
    }
}

/// Layout of the kernel for one alphabet size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwarParams {
    sigma: u32,
    /// Bits per symbol code.
    code_bits: usize,
    /// Symbol field width, code plus guard bit.
    field: usize,
    /// Distance between consecutive copies and counters.
    stride: usize,
    words: usize,
    /// Guard bit of every field of copy `i` set, for every `i`.
    guards: Wide,
    /// Copy `i` holds the code of `i` in every field.
    patterns: Wide,
    /// The field of each copy where the spreading multiply leaves the sum.
    sum_mask: Wide,
    /// Overflow bit of each counter.
    overflow: Wide,
}

/// Which counters [`SwarParams::threshold_extract`] reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Band {
    /// Counts at or above the threshold.
    High,
    /// Counts from 1 to one below the threshold.
    Low,
    Both,
}

impl SwarParams {
    pub fn new(sigma: u32) -> Result<Self> {
        if !(2..=MAX_SIGMA).contains(&sigma) {
            return Err(Error::Config(format!(
                "word-parallel kernel supports alphabets of 2..={MAX_SIGMA}, got {sigma}"
            )));
        }
        let k = sigma as usize;
        let code_bits = (sigma - 1).ilog2() as usize + 1;
        let field = code_bits + 1;
        let stride = 2 * k * field;
        let total = stride * k;
        let words = total.div_ceil(64);
        if words > MAX_WORDS {
            return Err(Error::Config("register layout exceeds the emulated width".into()));
        }
        let mut guards = Wide::zero(words);
        let mut patterns = Wide::zero(words);
        let mut sum_mask = Wide::zero(words);
        let mut overflow = Wide::zero(words);
        for i in 0..k {
            let base = i * stride;
            for p in 0..k {
                guards.set_bit(base + p * field + code_bits);
                patterns.or_at(base + p * field, i as u64);
            }
            sum_mask.or_at(base + (k - 1) * field, (1u64 << field) - 1);
            overflow.set_bit(base + (k + 1) * field);
        }
        Ok(Self {
            sigma,
            code_bits,
            field,
            stride,
            words,
            guards,
            patterns,
            sum_mask,
            overflow,
        })
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    /// Symbols per chunk.
    pub fn chunk_len(&self) -> usize {
        self.sigma as usize
    }

    pub fn code_bits(&self) -> usize {
        self.code_bits
    }

    /// Largest number of symbols a counter can accumulate.
    pub fn capacity(&self) -> usize {
        (1 << (2 * self.field)) - 1
    }

    fn counter_at(&self, i: usize) -> usize {
        i * self.stride + (self.sigma as usize - 1) * self.field
    }

    /// Packs up to `k` symbols, padding with symbol 0. Returns the chunk and
    /// the number of padding symbols.
    pub fn pack(&self, symbols: &[u8]) -> Result<(PackedChunk, usize)> {
        let k = self.chunk_len();
        if symbols.len() > k {
            return Err(Error::Config(format!("chunk of {} symbols exceeds {k}", symbols.len())));
        }
        let mut x = 0u128;
        for (p, &s) in symbols.iter().enumerate() {
            if s as u32 >= self.sigma {
                return Err(Error::domain("symbol", format!("{s} outside 0..{}", self.sigma)));
            }
            x |= (s as u128) << (p * self.field);
        }
        Ok((PackedChunk { x }, k - symbols.len()))
    }

    /// Counts every symbol of `chunk`.
    pub fn count_chunk(&self, chunk: &PackedChunk) -> CounterWord {
        let k = self.chunk_len();
        // sigma' copies of the chunk, `stride` bits apart
        let mut x = Wide::zero(self.words);
        for i in 0..k {
            x.or_at(i * self.stride, chunk.x as u64);
            x.or_at(i * self.stride + 64, (chunk.x >> 64) as u64);
        }
        let x = x.xor(&self.patterns);
        let y = &self.guards;
        // guard bit survives exactly in fields that compared equal
        let flags = y.sub(&x.and(&y.not())).and(y).and(&x.not());
        let ones = flags.shr(self.code_bits);
        // spreading multiply: field p lands at p + q for every q < k, so the
        // k flags of a copy sum into its field k - 1
        let mut prod = Wide::zero(self.words);
        for q in 0..k {
            prod = prod.add(&ones.shl(q * self.field));
        }
        CounterWord {
            c: prod.and(&self.sum_mask),
        }
    }

    /// Counts a symbol slice of any length up to [`Self::capacity`].
    pub fn count(&self, symbols: &[u8]) -> Result<CounterWord> {
        if symbols.len() > self.capacity() {
            return Err(Error::Config(format!(
                "{} symbols exceed counter capacity {}",
                symbols.len(),
                self.capacity()
            )));
        }
        let mut acc = CounterWord {
            c: Wide::zero(self.words),
        };
        for chunk in symbols.chunks(self.chunk_len()) {
            let (packed, pad) = self.pack(chunk)?;
            let counted = self.count_chunk(&packed);
            acc = acc.add(&self.pad_correction(&counted, pad)?);
        }
        Ok(acc)
    }

    /// Removes `pad` spurious zero symbols from counter 0.
    pub fn pad_correction(&self, c: &CounterWord, pad: usize) -> Result<CounterWord> {
        if pad == 0 {
            return Ok(*c);
        }
        let at = self.counter_at(0);
        let have = c.c.field(at, 2 * self.field) as usize;
        if have < pad {
            return Err(Error::Logic(format!(
                "padding correction of {pad} exceeds counter value {have}"
            )));
        }
        let mut sub = Wide::zero(self.words);
        sub.or_at(at, pad as u64);
        Ok(CounterWord { c: c.c.sub(&sub) })
    }

    /// Builds a counter register from explicit counts, for tests.
    pub fn counters_from(&self, counts: &[u64]) -> Result<CounterWord> {
        if counts.len() != self.sigma as usize || counts.iter().any(|&c| c as usize > self.capacity()) {
            return Err(Error::Config("counts do not fit the counter layout".into()));
        }
        let mut c = Wide::zero(self.words);
        for (i, &v) in counts.iter().enumerate() {
            c.or_at(self.counter_at(i), v);
        }
        Ok(CounterWord { c })
    }

    /// Decodes every counter.
    pub fn counts(&self, c: &CounterWord) -> Vec<u64> {
        (0..self.sigma as usize)
            .map(|i| c.c.field(self.counter_at(i), 2 * self.field))
            .collect()
    }

    /// Overflow bits of counters that reach `y` after biasing.
    fn reaching(&self, c: &CounterWord, y: u64) -> Wide {
        let bias = (1u64 << (2 * self.field)) - y;
        let mut b = Wide::zero(self.words);
        for i in 0..self.sigma as usize {
            b.or_at(self.counter_at(i), bias);
        }
        c.c.add(&b).and(&self.overflow)
    }

    fn decode(&self, bits: &Wide) -> Vec<u32> {
        let first = (self.sigma as usize + 1) * self.field;
        bits.ones()
            .into_iter()
            .map(|b| ((b - first) / self.stride) as u32)
            .collect()
    }

    /// Symbols whose counter is in the requested band relative to `y`.
    /// For [`Band::Both`] the high band comes first, then the low band.
    pub fn threshold_extract(&self, c: &CounterWord, y: u64, band: Band) -> Result<(Vec<u32>, Vec<u32>)> {
        if y == 0 || y > self.capacity() as u64 + 1 {
            return Err(Error::domain("threshold", format!("{y} outside 1..={}", self.capacity() + 1)));
        }
        let high = if y as usize > self.capacity() {
            Wide::zero(self.words)
        } else {
            self.reaching(c, y)
        };
        let want_low = matches!(band, Band::Low | Band::Both);
        let low = if want_low {
            let present = self.reaching(c, 1);
            present.and(&high.not())
        } else {
            Wide::zero(self.words)
        };
        Ok(match band {
            Band::High => (self.decode(&high), Vec::new()),
            Band::Low => (Vec::new(), self.decode(&low)),
            Band::Both => (self.decode(&high), self.decode(&low)),
        })
    }
}

/// Up to `k` symbols packed into fields of `code_bits + 1` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackedChunk {
    x: u128,
}

/// Counter register: one field per symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CounterWord {
    c: Wide,
}

impl CounterWord {
    pub fn add(&self, o: &CounterWord) -> CounterWord {
        CounterWord { c: self.c.add(&o.c) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(sigma: u32, s: &[u8]) -> Vec<u64> {
        let mut c = vec![0u64; sigma as usize];
        for &x in s {
            c[x as usize] += 1;
        }
        c
    }

    #[test]
    fn chunk_examples() {
        let p = SwarParams::new(4).unwrap();
        let (chunk, pad) = p.pack(&[0, 1, 1, 3]).unwrap();
        assert_eq!(pad, 0);
        assert_eq!(p.counts(&p.count_chunk(&chunk)), vec![1, 2, 0, 1]);
        let (chunk, _) = p.pack(&[0, 0, 0, 0]).unwrap();
        assert_eq!(p.counts(&p.count_chunk(&chunk)), vec![4, 0, 0, 0]);
        let (chunk, _) = p.pack(&[0, 1, 2, 3]).unwrap();
        assert_eq!(p.counts(&p.count_chunk(&chunk)), vec![1, 1, 1, 1]);
    }

    #[test]
    fn padding_examples() {
        let p = SwarParams::new(4).unwrap();
        let c = p.counters_from(&[4, 0, 0, 0]).unwrap();
        assert_eq!(p.counts(&p.pad_correction(&c, 3).unwrap()), vec![1, 0, 0, 0]);
        let c = p.counters_from(&[2, 1, 1, 0]).unwrap();
        assert_eq!(p.counts(&p.pad_correction(&c, 1).unwrap()), vec![1, 1, 1, 0]);
        assert_eq!(p.pad_correction(&c, 0).unwrap(), c);
        let c = p.counters_from(&[1, 3, 0, 0]).unwrap();
        assert!(matches!(p.pad_correction(&c, 2), Err(Error::Logic(_))));
    }

    #[test]
    fn threshold_examples() {
        let p = SwarParams::new(4).unwrap();
        let c = p.counters_from(&[1, 2, 0, 1]).unwrap();
        assert_eq!(p.threshold_extract(&c, 2, Band::High).unwrap().0, vec![1]);
        assert_eq!(p.threshold_extract(&c, 2, Band::Low).unwrap().1, vec![0, 3]);
        assert_eq!(p.threshold_extract(&c, 1, Band::High).unwrap().0, vec![0, 1, 3]);
        assert!(p.threshold_extract(&c, 0, Band::High).is_err());
    }

    #[test]
    fn layout_errors() {
        assert!(SwarParams::new(1).is_err());
        assert!(SwarParams::new(17).is_err());
        let p = SwarParams::new(2).unwrap();
        assert!(p.pack(&[0, 1, 1]).is_err());
        assert!(p.pack(&[2]).is_err());
    }

    #[test]
    fn accumulation_is_concatenation() {
        for sigma in [2u32, 3, 5, 8, 16] {
            let p = SwarParams::new(sigma).unwrap();
            let half = p.capacity() / 2;
            let a: Vec<u8> = (0..half).map(|i| (i * 7 % sigma as usize) as u8).collect();
            let b: Vec<u8> = (0..p.capacity() - half).map(|i| (i * i % sigma as usize) as u8).collect();
            let ab: Vec<u8> = a.iter().chain(&b).copied().collect();
            let sum = p.count(&a).unwrap().add(&p.count(&b).unwrap());
            assert_eq!(p.counts(&sum), p.counts(&p.count(&ab).unwrap()));
            assert_eq!(p.counts(&sum), scalar(sigma, &ab));
        }
    }
}
