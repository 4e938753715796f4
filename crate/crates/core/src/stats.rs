//! Per-query operation tallies.

use crate::sequence::WaveletSequence;

/// Which route a query took.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum QueryPath {
    #[default]
    None,
    /// Every alphabet symbol tested (threshold below `1/sigma`).
    Exhaustive,
    /// Short range scanned through a linked list of positions.
    Sequential,
    /// Short range on a tiny alphabet counted word-parallel.
    WordParallel,
    /// Candidates taken from flag bitvectors.
    Flagged,
    /// Candidates taken from colored range listing.
    Listing,
    /// Threshold descent over majority queries.
    Mode,
}

impl QueryPath {
    pub fn name(self) -> &'static str {
        match self {
            QueryPath::None => "none",
            QueryPath::Exhaustive => "exhaustive",
            QueryPath::Sequential => "sequential",
            QueryPath::WordParallel => "word-parallel",
            QueryPath::Flagged => "flagged",
            QueryPath::Listing => "listing",
            QueryPath::Mode => "mode",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueryStats {
    /// Distinct candidate symbols whose frequency was verified.
    pub candidates: usize,
    pub accesses: usize,
    pub ranks: usize,
    pub partial_ranks: usize,
    pub selects: usize,
    /// Recursion steps of colored range listing.
    pub listing_steps: usize,
    /// Cells of the previous-occurrence array read by listing.
    pub probes: usize,
    /// Threshold levels tried by a mode query.
    pub iterations: usize,
    pub path: QueryPath,
}

impl QueryStats {
    /// Rank, select, partial-rank and access calls together.
    pub fn sequence_ops(&self) -> usize {
        self.accesses + self.ranks + self.partial_ranks + self.selects
    }

    pub fn absorb(&mut self, other: &QueryStats) {
        self.candidates += other.candidates;
        self.accesses += other.accesses;
        self.ranks += other.ranks;
        self.partial_ranks += other.partial_ranks;
        self.selects += other.selects;
        self.listing_steps += other.listing_steps;
        self.probes += other.probes;
        self.iterations += other.iterations;
    }
}

/// A sequence view that tallies every operation into a [`QueryStats`].
pub struct Counted<'a> {
    seq: &'a WaveletSequence,
    pub stats: QueryStats,
}

impl<'a> Counted<'a> {
    pub fn new(seq: &'a WaveletSequence) -> Self {
        Self {
            seq,
            stats: QueryStats::default(),
        }
    }

    pub fn seq(&self) -> &'a WaveletSequence {
        self.seq
    }

    #[inline]
    pub fn access(&mut self, k: usize) -> u32 {
        self.stats.accesses += 1;
        self.seq.access_rank(k).0
    }

    /// Symbol at `k` and its partial rank; counted as one partial rank.
    #[inline]
    pub fn partial_rank(&mut self, k: usize) -> (u32, usize) {
        self.stats.partial_ranks += 1;
        self.seq.access_rank(k)
    }

    #[inline]
    pub fn rank(&mut self, a: u32, k: usize) -> usize {
        self.stats.ranks += 1;
        self.seq.rank_unchecked(a, k)
    }

    #[inline]
    pub fn select(&mut self, a: u32, r: usize) -> Option<usize> {
        self.stats.selects += 1;
        self.seq.select_unchecked(a, r)
    }

    /// Occurrences of `a` in `i..=j`, with two ranks.
    #[inline]
    pub fn count(&mut self, a: u32, i: usize, j: usize) -> usize {
        self.rank(a, j) - self.rank(a, i - 1)
    }

    /// Previous occurrence of `S[k]`, or 0: one partial rank and, unless
    /// `k` is a first occurrence, one select.
    #[inline]
    pub fn c_value(&mut self, k: usize) -> usize {
        let (a, r) = self.partial_rank(k);
        if r == 1 {
            0
        } else {
            self.select(a, r - 1).unwrap()
        }
    }
}
