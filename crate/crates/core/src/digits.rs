//! Packed small-digit sequence with per-digit rank and select, used for the
//! levels of a multiary wavelet tree.
//!
//! Digits of `c` bits are stored in lanes of `next_pow2(c)` bits so no lane
//! straddles a word. Equality and less-than lane counts are computed with
//! whole-word arithmetic.

use crate::bits::select_in_word;
use crate::error::{Error, Result};
use crate::persist::{Persist, Reader, Writer};

const SUPER_DIGITS: usize = 512;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DigitVector {
    len: usize,
    digit_bits: u32,
    lane: u32,
    words: Vec<u64>,
    /// `le[sb * K + d]`: digits `<= d` before superblock `sb`, `K = 2^c`.
    le: Vec<u32>,
    masks: Masks,
}

/// Word constants derived from the lane width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
struct Masks {
    /// 1 in every lane.
    ones: u64,
    /// High bit of every lane.
    high: u64,
    /// 1 in every double-width field.
    field_ones: u64,
    /// Low `lane` bits of every double-width field.
    field_low: u64,
    /// Guard bit just above `field_low`.
    field_guard: u64,
}

fn broadcast(v: u64, lane: u32) -> u64 {
    let mut out = 0u64;
    let mut shift = 0;
    while shift < 64 {
        out |= v << shift;
        shift += lane;
    }
    out
}

impl Masks {
    fn new(lane: u32) -> Self {
        Self {
            ones: broadcast(1, lane),
            high: broadcast(1 << (lane - 1), lane),
            field_ones: broadcast(1, 2 * lane),
            field_low: broadcast((1 << lane) - 1, 2 * lane),
            field_guard: broadcast(1 << lane, 2 * lane),
        }
    }
}

impl DigitVector {
    pub fn new(digits: &[u8], digit_bits: u32) -> Self {
        assert!((1..=6).contains(&digit_bits));
        let lane = digit_bits.next_power_of_two();
        let per_word = (64 / lane) as usize;
        let mut words = vec![0u64; digits.len().div_ceil(per_word)];
        let k = 1usize << digit_bits;
        for (i, &d) in digits.iter().enumerate() {
            assert!((d as usize) < k, "digit {d} exceeds {digit_bits} bits");
            words[i / per_word] |= (d as u64) << ((i % per_word) as u32 * lane);
        }
        let nsb = digits.len().div_ceil(SUPER_DIGITS);
        let mut le = Vec::with_capacity(nsb * k);
        let mut counts = vec![0u32; k];
        for sb in 0..nsb {
            let mut acc = 0;
            for &c in &counts {
                acc += c;
                le.push(acc);
            }
            let lo = sb * SUPER_DIGITS;
            for &d in &digits[lo..(lo + SUPER_DIGITS).min(digits.len())] {
                counts[d as usize] += 1;
            }
        }
        Self {
            len: digits.len(),
            digit_bits,
            lane,
            words,
            le,
            masks: Masks::new(lane),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }


    fn per_word(&self) -> usize {
        (64 / self.lane) as usize
    }

    fn k(&self) -> usize {
        1 << self.digit_bits
    }

    #[inline]
    pub fn get(&self, i: usize) -> u32 {
        debug_assert!(i < self.len);
        let pw = self.per_word();
        ((self.words[i / pw] >> ((i % pw) as u32 * self.lane)) & ((1 << self.lane) - 1)) as u32
    }

    /// Lanes of `w` equal to `d`, flagged by their high bit.
    #[inline]
    fn eq_flags(&self, w: u64, d: u32) -> u64 {
        let h = self.masks.high;
        let m = !h;
        let x = w ^ (d as u64 * self.masks.ones);
        // high bit set iff lane is nonzero; cannot carry across lanes
        let nz = (((x & m) + m) | x) & h;
        !nz & h
    }

    /// Lanes of `w` (padding lanes included) holding a digit `>= d`,
    /// for `d >= 1`.
    #[inline]
    fn ge_in_word(&self, w: u64, d: u32) -> usize {
        let mk = &self.masks;
        let sub = d as u64 * mk.field_ones;
        let even = ((((w & mk.field_low) | mk.field_guard) - sub) & mk.field_guard).count_ones();
        let odd = (((((w >> self.lane) & mk.field_low) | mk.field_guard) - sub) & mk.field_guard).count_ones();
        (even + odd) as usize
    }

    /// Digits below `d` and digits at most `d` among the first `p`.
    #[inline]
    pub fn lt_le(&self, d: u32, p: usize) -> (usize, usize) {
        debug_assert!(p <= self.len);
        if p == 0 {
            return (0, 0);
        }
        let k = self.k();
        // p == len may sit exactly on a superblock boundary with no entry
        let sb = (p / SUPER_DIGITS).min(self.len.div_ceil(SUPER_DIGITS) - 1);
        let base = sb * k;
        let mut lt = if d == 0 { 0 } else { self.le[base + d as usize - 1] as usize };
        let mut le = self.le[base + d as usize] as usize;
        let pw = self.per_word();
        let first = sb * SUPER_DIGITS / pw;
        let last = p / pw;
        let full = d as usize + 1 >= k;
        let mut count = |w: u64, lanes: usize| {
            // lanes beyond `lanes` are forced to zero, which is below any
            // d >= 1, so only real lanes can count as >= d
            if d > 0 {
                lt += lanes - self.ge_in_word(w, d);
            }
            le += if full { lanes } else { lanes - self.ge_in_word(w, d + 1) };
        };
        for wi in first..last {
            count(self.words[wi], pw);
        }
        let rem = p % pw;
        if rem != 0 {
            let w = self.words[last] & ((1u64 << (rem as u32 * self.lane)) - 1);
            count(w, rem);
        }
        (lt, le)
    }

    /// Occurrences of digit `d` among the first `p` digits.
    #[inline]
    pub fn rank(&self, d: u32, p: usize) -> usize {
        let (lt, le) = self.lt_le(d, p);
        le - lt
    }

    fn eq_before_super(&self, d: u32, sb: usize) -> usize {
        let base = sb * self.k();
        let le = self.le[base + d as usize] as usize;
        let lt = if d == 0 { 0 } else { self.le[base + d as usize - 1] as usize };
        le - lt
    }

    /// 1-based position of the `r`-th occurrence of `d`.
    pub fn select(&self, d: u32, r: usize) -> Option<usize> {
        if r == 0 || self.len == 0 {
            return None;
        }
        let nsb = self.len.div_ceil(SUPER_DIGITS);
        // last superblock with fewer than r occurrences before it
        let (mut lo, mut hi) = (0, nsb - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if self.eq_before_super(d, mid) < r {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let mut rem = r - self.eq_before_super(d, lo);
        let pw = self.per_word();
        let mut wi = lo * SUPER_DIGITS / pw;
        while wi < self.words.len() {
            let valid = (self.len - wi * pw).min(pw);
            let mut f = self.eq_flags(self.words[wi], d);
            if valid < pw {
                f &= (1u64 << (valid as u32 * self.lane)) - 1;
            }
            let c = f.count_ones() as usize;
            if rem <= c {
                let bit = select_in_word(f, rem as u32);
                return Some(wi * pw + (bit / self.lane) as usize + 1);
            }
            rem -= c;
            wi += 1;
        }
        None
    }

    pub fn size_bits(&self) -> usize {
        self.words.len() * 64 + self.le.len() * 32 + 3 * 64
    }
}

impl Persist for DigitVector {
    fn write_to(&self, w: &mut Writer) {
        w.section(b"DIGV", |w| {
            w.usize(self.len);
            w.u32(self.digit_bits);
            w.u64s(&self.words);
            w.u32s(&self.le);
        });
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let mut s = r.section(b"DIGV")?;
        let len = s.usize()?;
        let digit_bits = s.u32()?;
        let words = s.u64s()?;
        let le = s.u32s()?;
        s.finish("digit vector")?;
        if !(1..=6).contains(&digit_bits) {
            return Err(Error::format("digit width out of range"));
        }
        let lane = digit_bits.next_power_of_two();
        let per_word = (64 / lane) as usize;
        if words.len() != len.div_ceil(per_word)
            || le.len() != len.div_ceil(SUPER_DIGITS) << digit_bits
        {
            return Err(Error::format("digit vector shape mismatch"));
        }
        Ok(Self {
            len,
            digit_bits,
            lane,
            words,
            le,
            masks: Masks::new(lane),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_select_match_scan() {
        let mut x = 0x9E37_79B9_7F4A_7C15u64;
        for c in 1..=6u32 {
            for n in [1usize, 7, 64, 511, 512, 513, 2100] {
                let digits: Vec<u8> = (0..n)
                    .map(|_| {
                        x ^= x << 13;
                        x ^= x >> 7;
                        x ^= x << 17;
                        // skew towards small digits so some are absent
                        ((x % (1 << c)) & ((x >> 20) % (1 << c))) as u8
                    })
                    .collect();
                let dv = DigitVector::new(&digits, c);
                for (i, &d) in digits.iter().enumerate() {
                    assert_eq!(dv.get(i), d as u32);
                }
                for d in 0..(1u32 << c) {
                    let mut seen = 0;
                    for p in 0..=n {
                        if p > 0 && digits[p - 1] as u32 == d {
                            seen += 1;
                            assert_eq!(dv.select(d, seen), Some(p), "c={c} n={n} d={d}");
                        }
                        if p % 5 == 0 || p == n {
                            assert_eq!(dv.rank(d, p), seen);
                            let lt = digits[..p].iter().filter(|&&x| (x as u32) < d).count();
                            assert_eq!(dv.lt_le(d, p).0, lt);
                        }
                    }
                    assert_eq!(dv.select(d, seen + 1), None);
                }
                assert_eq!(DigitVector::from_bytes(&dv.to_bytes()).unwrap(), dv);
            }
        }
    }
}
