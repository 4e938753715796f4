//! Seeded random sequences and queries for tests, verification and
//! benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};

pub type CorpusRng = ChaCha8Rng;

pub fn rng(seed: u64) -> CorpusRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Uniform,
    /// Symbol `k` drawn with weight `k^-s`.
    Zipf(f64),
}

impl Shape {
    pub fn name(&self) -> String {
        match self {
            Shape::Uniform => "uniform".into(),
            Shape::Zipf(s) => format!("zipf({s})"),
        }
    }
}

/// `n` symbols in `1..=sigma`.
pub fn sequence(rng: &mut CorpusRng, n: usize, sigma: u32, shape: Shape) -> Result<Vec<u32>> {
    if sigma == 0 {
        return Err(Error::domain("alphabet", "sigma must be at least 1"));
    }
    Ok(match shape {
        Shape::Uniform => (0..n).map(|_| rng.random_range(1..=sigma)).collect(),
        Shape::Zipf(s) => {
            let z = Zipf::new(sigma as f64, s).map_err(|e| Error::domain("zipf exponent", e.to_string()))?;
            (0..n).map(|_| (z.sample(rng) as u32).clamp(1, sigma)).collect()
        }
    })
}

/// `n` symbols in `1..=sigma` arranged in runs of random length up to
/// `max_run`.
pub fn runs(rng: &mut CorpusRng, n: usize, sigma: u32, max_run: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = rng.random_range(1..=sigma.max(1));
        let r = rng.random_range(1..=max_run.max(1)).min(n - out.len());
        out.extend(std::iter::repeat_n(a, r));
    }
    out
}

/// A uniformly random non-empty range of `1..=n`.
pub fn range(rng: &mut CorpusRng, n: usize) -> (usize, usize) {
    let a = rng.random_range(1..=n);
    let b = rng.random_range(1..=n);
    (a.min(b), a.max(b))
}

/// A range of exactly `len` positions, clamped to `n`.
pub fn range_of_len(rng: &mut CorpusRng, n: usize, len: usize) -> (usize, usize) {
    let len = len.clamp(1, n);
    let i = rng.random_range(1..=n - len + 1);
    (i, i + len - 1)
}

/// Thresholds exercised by the randomized suites for alphabet size `sigma`.
pub fn tau_grid(sigma: u32) -> Vec<f64> {
    let s = sigma.max(1) as f64;
    vec![1.0, 0.9, 0.5, 0.2, 0.05, 1.0 / s, 0.5 / s]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_alphabet() {
        for shape in [Shape::Uniform, Shape::Zipf(1.1)] {
            let a = sequence(&mut rng(7), 500, 16, shape).unwrap();
            let b = sequence(&mut rng(7), 500, 16, shape).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|&x| (1..=16).contains(&x)));
        }
        let z = sequence(&mut rng(1), 10_000, 256, Shape::Zipf(1.3)).unwrap();
        let ones = z.iter().filter(|&&x| x == 1).count();
        let twos = z.iter().filter(|&&x| x == 2).count();
        assert!(ones > twos);
    }

    #[test]
    fn runs_fill_exactly() {
        let s = runs(&mut rng(2), 1000, 5, 40);
        assert_eq!(s.len(), 1000);
        assert!(s.windows(2).filter(|w| w[0] == w[1]).count() > 500);
    }

    #[test]
    fn ranges_are_valid() {
        let mut r = rng(3);
        for _ in 0..100 {
            let (i, j) = range(&mut r, 10);
            assert!(1 <= i && i <= j && j <= 10);
            let (i, j) = range_of_len(&mut r, 10, 4);
            assert_eq!(j - i + 1, 4);
        }
    }
}
