use super::{BitVector, SparseBitVector};
use crate::error::{Error, Result};
use crate::persist::{Persist, Reader, Writer};

/// A bitvector in whichever of three encodings is smallest: plain, sparse
/// over the ones, or sparse over the zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BitStore {
    Plain(BitVector),
    Ones(SparseBitVector),
    Zeros(SparseBitVector),
}

impl Default for BitStore {
    fn default() -> Self {
        BitStore::Plain(BitVector::default())
    }
}

impl BitStore {
    pub fn plain(bv: BitVector) -> Self {
        BitStore::Plain(bv)
    }

    /// Chooses the encoding with the fewest reported bits.
    pub fn smallest(bv: BitVector) -> Self {
        let n = bv.len();
        let ones: Vec<usize> = bv.ones_in(0, n).collect();
        let plain_bits = bv.size_bits();
        let sparse_ones = SparseBitVector::from_positions(n, &ones);
        if ones.len() <= n / 2 {
            if sparse_ones.size_bits() < plain_bits {
                return BitStore::Ones(sparse_ones);
            }
            return BitStore::Plain(bv);
        }
        let zeros: Vec<usize> = {
            let mut z = Vec::with_capacity(n - ones.len());
            let mut it = ones.iter().peekable();
            for i in 0..n {
                if it.peek() == Some(&&i) {
                    it.next();
                } else {
                    z.push(i);
                }
            }
            z
        };
        let sparse_zeros = SparseBitVector::from_positions(n, &zeros);
        if sparse_zeros.size_bits() < plain_bits {
            BitStore::Zeros(sparse_zeros)
        } else {
            BitStore::Plain(bv)
        }
    }

    /// Sparse encoding of the given sorted 0-based positions, without
    /// materializing a plain bitvector.
    pub fn sparse_from_positions(len: usize, positions: &[usize]) -> Self {
        BitStore::Ones(SparseBitVector::from_positions(len, positions))
    }

    /// Speeds up selects that a sparse encoding answers by search, at a
    /// small space cost. Plain vectors are returned unchanged.
    pub fn with_select_support(self) -> Self {
        match self {
            BitStore::Plain(b) => BitStore::Plain(b),
            BitStore::Ones(s) => BitStore::Ones(s.with_select0_directory()),
            BitStore::Zeros(s) => BitStore::Zeros(s.with_select0_directory()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            BitStore::Plain(b) => b.len(),
            BitStore::Ones(s) | BitStore::Zeros(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count_ones(&self) -> usize {
        match self {
            BitStore::Plain(b) => b.count_ones(),
            BitStore::Ones(s) => s.count_ones(),
            BitStore::Zeros(s) => s.len() - s.count_ones(),
        }
    }

    #[inline]
    pub fn rank1(&self, p: usize) -> usize {
        match self {
            BitStore::Plain(b) => b.rank1(p),
            BitStore::Ones(s) => s.rank1(p),
            BitStore::Zeros(s) => s.rank0(p),
        }
    }

    #[inline]
    pub fn rank0(&self, p: usize) -> usize {
        p - self.rank1(p)
    }

    pub fn get(&self, idx: usize) -> bool {
        match self {
            BitStore::Plain(b) => b.get(idx),
            BitStore::Ones(s) => s.get(idx),
            BitStore::Zeros(s) => !s.get(idx),
        }
    }

    pub fn select1(&self, r: usize) -> Option<usize> {
        match self {
            BitStore::Plain(b) => b.select1(r),
            BitStore::Ones(s) => s.select1(r),
            BitStore::Zeros(s) => s.select0(r),
        }
    }

    pub fn select0(&self, r: usize) -> Option<usize> {
        match self {
            BitStore::Plain(b) => b.select0(r),
            BitStore::Ones(s) => s.select0(r),
            BitStore::Zeros(s) => s.select1(r),
        }
    }

    /// 0-based positions of the ones in `[from, to)`.
    pub fn ones_in(&self, from: usize, to: usize) -> Box<dyn Iterator<Item = usize> + '_> {
        match self {
            BitStore::Plain(b) => Box::new(b.ones_in(from, to)),
            BitStore::Ones(s) => Box::new(s.ones_in(from, to)),
            BitStore::Zeros(s) => {
                let to = to.min(s.len());
                let start = if from < to { s.rank0(from) } else { to };
                Box::new(
                    (start + 1..)
                        .map_while(move |r| s.select0(r).map(|p| p - 1))
                        .take_while(move |&p| p < to),
                )
            }
        }
    }

    pub fn size_bits(&self) -> usize {
        8 + match self {
            BitStore::Plain(b) => b.size_bits(),
            BitStore::Ones(s) | BitStore::Zeros(s) => s.size_bits(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            BitStore::Plain(_) => "plain",
            BitStore::Ones(_) => "sparse-ones",
            BitStore::Zeros(_) => "sparse-zeros",
        }
    }

    /// Flips one bit. Only used by fault-injection tests.
    pub(crate) fn flip(&mut self, idx: usize) {
        let n = self.len();
        let mut ones: Vec<usize> = self.ones_in(0, n).collect();
        match ones.binary_search(&idx) {
            Ok(k) => {
                ones.remove(k);
            }
            Err(k) => ones.insert(k, idx),
        }
        *self = match self {
            BitStore::Plain(_) => BitStore::Plain(BitVector::from_indices(n, ones)),
            _ => BitStore::sparse_from_positions(n, &ones),
        };
    }
}

impl Persist for BitStore {
    fn write_to(&self, w: &mut Writer) {
        match self {
            BitStore::Plain(b) => {
                w.u8(0);
                b.write_to(w);
            }
            BitStore::Ones(s) => {
                w.u8(1);
                s.write_to(w);
            }
            BitStore::Zeros(s) => {
                w.u8(2);
                s.write_to(w);
            }
        }
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        match r.u8()? {
            0 => Ok(BitStore::Plain(BitVector::read_from(r)?)),
            1 => Ok(BitStore::Ones(SparseBitVector::read_from(r)?)),
            2 => Ok(BitStore::Zeros(SparseBitVector::read_from(r)?)),
            k => Err(Error::format(format!("unknown bit store kind {k}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_encoding_answers_alike() {
        let n = 2000;
        for modulus in [2usize, 50, 1] {
            let plain = BitVector::from_indices(n, (0..n).filter(|i| i % modulus != 1 || modulus == 1));
            let pos: Vec<usize> = plain.ones_in(0, n).collect();
            let stores = [
                BitStore::Plain(plain.clone()),
                BitStore::smallest(plain.clone()),
                BitStore::sparse_from_positions(n, &pos),
            ];
            for s in &stores {
                for p in (0..=n).step_by(7) {
                    assert_eq!(s.rank1(p), plain.rank1(p));
                }
                for r in (1..=plain.count_zeros()).step_by(3) {
                    assert_eq!(s.select0(r), plain.select0(r));
                }
                let got: Vec<usize> = s.ones_in(13, 1500).collect();
                let want: Vec<usize> = plain.ones_in(13, 1500).collect();
                assert_eq!(got, want, "{}", s.kind_name());
                let back = BitStore::from_bytes(&s.to_bytes()).unwrap();
                assert_eq!(&back, s);
            }
        }
    }

    #[test]
    fn dense_vectors_pick_zero_encoding() {
        let n = 10_000;
        let bv = BitVector::from_indices(n, (0..n).filter(|i| i % 1000 != 0));
        assert_eq!(BitStore::smallest(bv).kind_name(), "sparse-zeros");
    }

    #[test]
    fn flip_toggles_one_bit() {
        let mut s = BitStore::sparse_from_positions(10, &[1, 5]);
        s.flip(5);
        s.flip(7);
        assert_eq!(s.ones_in(0, 10).collect::<Vec<_>>(), vec![1, 7]);
    }
}
