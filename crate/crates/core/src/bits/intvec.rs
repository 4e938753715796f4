use crate::error::{Error, Result};
use crate::persist::{Persist, Reader, Writer};

/// Fixed-width bit-packed integer array. Fields may straddle word
/// boundaries.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct IntVector {
    len: usize,
    width: u32,
    words: Vec<u64>,
}

#[inline]
fn low_mask(width: u32) -> u64 {
    if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl IntVector {
    pub fn new(len: usize, width: u32) -> Self {
        assert!(width <= 64, "field width {width} exceeds 64 bits");
        let bits = len * width as usize;
        Self {
            len,
            width,
            words: vec![0; bits.div_ceil(64)],
        }
    }

    /// Smallest width holding every value of `values`.
    pub fn from_slice_min_width<T: Copy + Into<u64>>(values: &[T]) -> Self {
        let max = values.iter().map(|&v| v.into()).max().unwrap_or(0);
        let width = 64 - max.leading_zeros();
        let mut iv = Self::new(values.len(), width);
        for (i, &v) in values.iter().enumerate() {
            iv.set(i, v.into());
        }
        iv
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn get(&self, i: usize) -> u64 {
        debug_assert!(i < self.len);
        if self.width == 0 {
            return 0;
        }
        let bit = i * self.width as usize;
        let (w, off) = (bit / 64, (bit % 64) as u32);
        let mut v = self.words[w] >> off;
        if off + self.width > 64 {
            v |= self.words[w + 1] << (64 - off);
        }
        v & low_mask(self.width)
    }

    pub fn set(&mut self, i: usize, v: u64) {
        assert!(i < self.len);
        if self.width == 0 {
            debug_assert_eq!(v, 0);
            return;
        }
        let mask = low_mask(self.width);
        debug_assert!(v <= mask, "value {v} does not fit in {} bits", self.width);
        let v = v & mask;
        let bit = i * self.width as usize;
        let (w, off) = (bit / 64, (bit % 64) as u32);
        self.words[w] = (self.words[w] & !(mask << off)) | (v << off);
        if off + self.width > 64 {
            let spill = off + self.width - 64;
            let hi_mask = low_mask(spill);
            self.words[w + 1] = (self.words[w + 1] & !hi_mask) | (v >> (64 - off));
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn size_bits(&self) -> usize {
        self.words.len() * 64 + 128
    }
}

impl Persist for IntVector {
    fn write_to(&self, w: &mut Writer) {
        w.section(b"IVEC", |w| {
            w.usize(self.len);
            w.u32(self.width);
            w.u64s(&self.words);
        });
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        let mut s = r.section(b"IVEC")?;
        let len = s.usize()?;
        let width = s.u32()?;
        let words = s.u64s()?;
        s.finish("int vector")?;
        if width > 64 || words.len() != (len * width as usize).div_ceil(64) {
            return Err(Error::format("int vector length/width mismatch"));
        }
        Ok(Self { len, width, words })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straddling_fields_round_trip() {
        for width in [0u32, 1, 3, 7, 13, 31, 33, 63, 64] {
            let n = 200;
            let mut iv = IntVector::new(n, width);
            let vals: Vec<u64> = (0..n as u64)
                .map(|i| i.wrapping_mul(0x9E37_79B9_7F4A_7C15) & low_mask(width))
                .collect();
            for (i, &v) in vals.iter().enumerate() {
                iv.set(i, v);
            }
            // overwrite does not disturb neighbours
            iv.set(5, vals[5]);
            assert_eq!(iv.iter().collect::<Vec<_>>(), vals, "width {width}");
        }
    }

    #[test]
    fn min_width() {
        let iv = IntVector::from_slice_min_width(&[0u32, 5, 2]);
        assert_eq!(iv.width(), 3);
        assert_eq!(iv.get(1), 5);
        assert_eq!(IntVector::from_slice_min_width::<u32>(&[0, 0]).width(), 0);
    }
}
