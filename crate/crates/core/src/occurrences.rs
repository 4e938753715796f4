//! Build-time helpers over the raw sequence: per-symbol occurrence lists.

/// Positions of every symbol, grouped by symbol, 1-based and ascending.
pub(crate) struct Occurrences {
    offsets: Vec<usize>,
    positions: Vec<u32>,
}

impl Occurrences {
    pub fn new(symbols: &[u32], sigma: u32) -> Self {
        let mut offsets = vec![0usize; sigma as usize + 2];
        for &a in symbols {
            offsets[a as usize + 1] += 1;
        }
        for a in 1..offsets.len() {
            offsets[a] += offsets[a - 1];
        }
        let mut fill = offsets.clone();
        let mut positions = vec![0u32; symbols.len()];
        for (k, &a) in symbols.iter().enumerate() {
            positions[fill[a as usize]] = k as u32 + 1;
            fill[a as usize] += 1;
        }
        Self { offsets, positions }
    }

    pub fn sigma(&self) -> u32 {
        (self.offsets.len() - 2) as u32
    }

    /// Occurrences of symbol `a`.
    pub fn of(&self, a: u32) -> &[u32] {
        &self.positions[self.offsets[a as usize]..self.offsets[a as usize + 1]]
    }

    /// Occurrences of `a` within `lo..=hi`, with bounds clamped by the
    /// caller.
    pub fn count_in(&self, a: u32, lo: usize, hi: usize) -> usize {
        let occ = self.of(a);
        let l = occ.partition_point(|&p| (p as usize) < lo);
        let h = occ.partition_point(|&p| (p as usize) <= hi);
        h - l
    }
}

/// `[k - radius, k + radius]` clamped to `1..=n`.
pub(crate) fn window(k: usize, radius: usize, n: usize) -> (usize, usize) {
    (k.saturating_sub(radius).max(1), (k + radius).min(n))
}
