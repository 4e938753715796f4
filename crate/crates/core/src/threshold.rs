//! Query-time parameters derived from a range and a threshold.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeParams {
    pub i: usize,
    pub j: usize,
    pub len: usize,
    pub tau: f64,
    /// Smallest `t` with `tau * 2^t >= 1`.
    pub t: u32,
    /// `floor(lg len)`.
    pub b: u32,
    /// `floor(tau * len)`: majorities occur more often, minorities at most
    /// this often.
    pub threshold: usize,
}

/// Rounds `tau * len` down, snapping values within a relative 1e-9 of an
/// integer onto it so decimal thresholds such as 0.3 behave as written.
fn snapped_floor(tau: f64, len: usize) -> usize {
    let prod = tau * len as f64;
    let r = prod.round();
    if (prod - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        prod.floor() as usize
    }
}

impl RangeParams {
    pub fn new(n: usize, i: usize, j: usize, tau: f64) -> Result<Self> {
        if i == 0 || i > j {
            return Err(Error::range("range start", i, 1, j.max(1)));
        }
        if j > n {
            return Err(Error::range("range end", j, i, n));
        }
        Self::check_tau(tau)?;
        let len = j - i + 1;
        // multiplying by a power of two is exact, so this loop is too
        let mut t = 0;
        while tau * 2f64.powi(t as i32) < 1.0 {
            t += 1;
        }
        Ok(Self {
            i,
            j,
            len,
            tau,
            t,
            b: len.ilog2(),
            threshold: snapped_floor(tau, len),
        })
    }

    pub fn check_tau(tau: f64) -> Result<()> {
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(Error::domain("threshold", format!("tau = {tau} is not in (0, 1]")));
        }
        Ok(())
    }

    /// Fewest occurrences that make a majority.
    pub fn majority_min(&self) -> usize {
        self.threshold + 1
    }

    /// `tau < 1/sigma`: more than `sigma` candidates could be majorities
    /// only in count, so every symbol is tested.
    pub fn below_inverse_sigma(&self, sigma: u32) -> bool {
        self.tau * (sigma as f64) < 1.0
    }

    /// `ceil(1/tau)`.
    pub fn inverse_ceil(&self) -> usize {
        inverse_ceil(self.tau)
    }
}

/// `ceil(1/tau)` with the same near-integer snapping as the threshold.
pub fn inverse_ceil(tau: f64) -> usize {
    let x = 1.0 / tau;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_parameters() {
        let p = RangeParams::new(11, 4, 8, 0.5).unwrap();
        assert_eq!((p.len, p.t, p.b, p.threshold), (5, 1, 2, 2));
        let p = RangeParams::new(100, 1, 100, 0.2).unwrap();
        assert_eq!((p.t, p.b, p.threshold), (3, 6, 20));
        let p = RangeParams::new(10, 1, 10, 1.0).unwrap();
        assert_eq!((p.t, p.threshold), (0, 10));
        assert_eq!(RangeParams::new(10, 1, 10, 0.3).unwrap().threshold, 3);
        assert_eq!(inverse_ceil(0.2), 5);
        assert_eq!(inverse_ceil(0.3), 4);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(RangeParams::new(10, 0, 3, 0.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(RangeParams::new(10, 4, 3, 0.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(RangeParams::new(10, 1, 11, 0.5), Err(Error::OutOfRange { .. })));
        for tau in [0.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(RangeParams::new(10, 1, 3, tau), Err(Error::Domain { .. })));
        }
    }
}
