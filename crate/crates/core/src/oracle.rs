//! Brute-force reference answers computed by scanning the raw sequence.
//!
//! Nothing here touches the index structures, so these functions can judge
//! them, including after a save and load.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub counts: BTreeMap<u32, usize>,
    pub majorities: Vec<(u32, usize)>,
    pub minorities: Vec<(u32, usize)>,
    pub mode: (u32, usize),
}

fn check_range(s: &[u32], i: usize, j: usize) -> Result<()> {
    if i == 0 || i > j || j > s.len() {
        return Err(Error::range("range", j, i.max(1), s.len()));
    }
    Ok(())
}

/// `floor(tau * len)`, treating products within a relative 1e-9 of an
/// integer as that integer so that e.g. `0.3 * 10` counts as 3.
pub fn floor_tau_len(tau: f64, len: usize) -> usize {
    let x = tau * len as f64;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        x.floor() as usize
    }
}

/// Histogram of `s[i..=j]` (1-based, inclusive).
pub fn count(s: &[u32], i: usize, j: usize) -> Result<BTreeMap<u32, usize>> {
    check_range(s, i, j)?;
    let mut m = BTreeMap::new();
    for &a in &s[i - 1..j] {
        *m.entry(a).or_insert(0) += 1;
    }
    Ok(m)
}

/// Symbols occurring more than `tau * len` times, ascending.
pub fn majorities(s: &[u32], i: usize, j: usize, tau: f64) -> Result<Vec<(u32, usize)>> {
    let limit = floor_tau_len(tau, j + 1 - i);
    Ok(count(s, i, j)?
        .into_iter()
        .filter(|&(_, c)| c > limit)
        .collect())
}

/// Symbols occurring at least once and at most `floor(tau * len)` times.
pub fn minorities(s: &[u32], i: usize, j: usize, tau: f64) -> Result<Vec<(u32, usize)>> {
    let limit = floor_tau_len(tau, j + 1 - i);
    Ok(count(s, i, j)?
        .into_iter()
        .filter(|&(_, c)| c <= limit)
        .collect())
}

/// Most frequent symbol, smallest symbol on ties.
pub fn mode(s: &[u32], i: usize, j: usize) -> Result<(u32, usize)> {
    let counts = count(s, i, j)?;
    let mut best = (0u32, 0usize);
    for (a, c) in counts {
        if c > best.1 {
            best = (a, c);
        }
    }
    Ok(best)
}

pub fn evaluate(s: &[u32], i: usize, j: usize, tau: f64) -> Result<OracleResult> {
    Ok(OracleResult {
        counts: count(s, i, j)?,
        majorities: majorities(s, i, j, tau)?,
        minorities: minorities(s, i, j, tau)?,
        mode: mode(s, i, j)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: [u32; 11] = [1, 2, 3, 1, 4, 1, 5, 1, 2, 3, 1];

    #[test]
    fn examples() {
        assert_eq!(count(&S, 4, 8).unwrap(), BTreeMap::from([(1, 3), (4, 1), (5, 1)]));
        assert_eq!(count(&S, 3, 3).unwrap(), BTreeMap::from([(3, 1)]));
        assert_eq!(
            count(&S, 1, 11).unwrap(),
            BTreeMap::from([(1, 5), (2, 2), (3, 2), (4, 1), (5, 1)])
        );
        assert_eq!(majorities(&S, 4, 8, 0.5).unwrap(), vec![(1, 3)]);
        assert_eq!(minorities(&S, 4, 8, 0.5).unwrap(), vec![(4, 1), (5, 1)]);
        assert_eq!(mode(&S, 1, 11).unwrap(), (1, 5));
        assert!(count(&S, 0, 3).is_err());
        assert!(count(&S, 5, 4).is_err());
        assert!(count(&S, 1, 12).is_err());
    }

    #[test]
    fn threshold_snaps_near_integers() {
        assert_eq!(floor_tau_len(0.3, 10), 3);
        assert_eq!(floor_tau_len(0.1, 30), 3);
        assert_eq!(floor_tau_len(0.25, 11), 2);
        assert_eq!(floor_tau_len(1.0, 7), 7);
        assert_eq!(floor_tau_len(0.9, 1), 0);
    }
}
