//! The combined index: sequence, listing, majority and minority structures
//! over a densely remapped alphabet, plus the on-disk format.

use std::path::Path;

use crate::error::{Error, Result};
use crate::listing::ListingIndex;
use crate::majority::{Dispatch, MajorityConfig, MajorityIndex, VerifyMode};
use crate::minority::{MinorityConfig, MinorityIndex, Strategy};
use crate::persist::{Persist, Reader, Writer};
use crate::sequence::{SequenceConfig, WaveletSequence};
use crate::stats::{Counted, QueryStats};
use crate::threshold::RangeParams;

pub const FILE_MAGIC: &[u8; 4] = b"RFQI";
pub const FILE_VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexConfig {
    pub sequence: SequenceConfig,
    pub majority: MajorityConfig,
    pub minority: MinorityConfig,
    /// Block length of the listing structure; 1 keeps the full
    /// previous-occurrence array.
    pub listing_block: usize,
    pub with_majority: bool,
    pub with_minority: bool,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            sequence: SequenceConfig::default(),
            majority: MajorityConfig::default(),
            minority: MinorityConfig::default(),
            listing_block: 1,
            with_majority: true,
            with_minority: true,
        }
    }
}

impl IndexConfig {
    /// Sets the trade `g` everywhere it applies, including the listing
    /// block length.
    pub fn with_trade(mut self, g: usize) -> Self {
        self.majority.trade = g;
        self.minority.trade = g;
        self.listing_block = g;
        self
    }

    pub fn with_verify(mut self, v: VerifyMode) -> Self {
        self.majority.verify = v;
        self.minority.verify = v;
        self
    }

    pub fn with_dispatch(mut self, d: Dispatch) -> Self {
        self.majority.dispatch = d;
        self.minority.dispatch = d;
        self
    }

    /// A small-footprint configuration: sparse-aware bitvectors, sparsified
    /// listing, rank verification so no sampled families are kept.
    pub fn compact() -> Self {
        let mut c = Self::default().with_trade(64).with_verify(VerifyMode::Rank);
        c.sequence.compressed = true;
        c
    }

    /// One-line human-readable summary, stored in index files.
    pub fn describe(&self) -> String {
        format!(
            "arity_bits={} compressed={} listing_block={} chunk_len={} trade={} verify={:?} dispatch={:?} minority={:?} majority={} minority_index={}",
            self.sequence.arity_bits,
            self.sequence.compressed,
            self.listing_block,
            self.majority.chunk_len,
            self.majority.trade,
            self.majority.verify,
            self.majority.dispatch,
            self.minority.strategy,
            self.with_majority,
            self.with_minority,
        )
    }
}

/// How original values are displayed.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Alphabet {
    #[default]
    Integers,
    Bytes,
    /// Value `v` stands for `tokens[v]`.
    Tokens(Vec<String>),
}

impl Alphabet {
    pub fn render(&self, v: u32) -> String {
        match self {
            Alphabet::Integers => v.to_string(),
            Alphabet::Bytes => match u8::try_from(v) {
                Ok(b) if b.is_ascii_graphic() => format!("'{}'", b as char),
                _ => format!("0x{v:02x}"),
            },
            Alphabet::Tokens(t) => t.get(v as usize).cloned().unwrap_or_else(|| format!("#{v}")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Alphabet::Integers => "integers",
            Alphabet::Bytes => "bytes",
            Alphabet::Tokens(_) => "tokens",
        }
    }
}

/// A query answer together with the operations it took.
#[derive(Clone, Debug, PartialEq)]
pub struct Answer<T> {
    pub value: T,
    pub stats: QueryStats,
}

/// Space used by each part, in bits.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceReport {
    pub n: usize,
    pub sigma: u32,
    pub sequence: usize,
    pub listing: usize,
    pub majority: usize,
    pub minority: usize,
    pub remap: usize,
    pub total: usize,
    /// `n * H0` of the remapped sequence.
    pub entropy_bits: f64,
    /// `n * ceil(lg sigma)`.
    pub plain_bits: usize,
    pub families: Vec<(String, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeIndex {
    config: IndexConfig,
    seq: WaveletSequence,
    listing: ListingIndex,
    majority: Option<MajorityIndex>,
    minority: Option<MinorityIndex>,
    /// Original symbol of each dense symbol, indexed by dense symbol - 1.
    remap: Vec<u32>,
    alphabet: Alphabet,
}

/// Dense ranks of the distinct values, in increasing value order.
pub fn dense_remap(raw: &[u32]) -> (Vec<u32>, Vec<u32>) {
    let mut alphabet: Vec<u32> = raw.to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();
    let dense = raw
        .iter()
        .map(|v| alphabet.binary_search(v).unwrap() as u32 + 1)
        .collect();
    (dense, alphabet)
}

impl RangeIndex {
    /// Builds over arbitrary `u32` values; the alphabet is remapped to
    /// `1..=sigma` in value order.
    pub fn build(raw: &[u32], config: IndexConfig) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Config("cannot index an empty sequence".into()));
        }
        let (dense, remap) = dense_remap(raw);
        Self::build_dense(&dense, remap, config)
    }

    /// Builds over symbols already in `1..=sigma`, keeping them as they are.
    pub fn build_identity(symbols: &[u32], sigma: u32, config: IndexConfig) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Config("cannot index an empty sequence".into()));
        }
        Self::build_dense(symbols, (1..=sigma).collect(), config)
    }

    fn build_dense(symbols: &[u32], remap: Vec<u32>, config: IndexConfig) -> Result<Self> {
        let sigma = remap.len() as u32;
        let seq = WaveletSequence::build(symbols, sigma, config.sequence)?;
        let listing = ListingIndex::build(&seq, symbols, config.listing_block)?;
        let majority = if config.with_majority {
            Some(MajorityIndex::build(symbols, sigma, config.majority)?)
        } else {
            None
        };
        let minority = if config.with_minority {
            Some(MinorityIndex::build(symbols, sigma, config.minority)?)
        } else {
            None
        };
        Ok(Self {
            config,
            seq,
            listing,
            majority,
            minority,
            remap,
            alphabet: Alphabet::Integers,
        })
    }

    /// Attaches a display alphabet for original values.
    pub fn with_alphabet(mut self, alphabet: Alphabet) -> Self {
        self.alphabet = alphabet;
        self
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    pub fn sigma(&self) -> u32 {
        self.seq.sigma()
    }

    pub fn config(&self) -> IndexConfig {
        self.config
    }

    pub fn sequence(&self) -> &WaveletSequence {
        &self.seq
    }

    pub fn listing(&self) -> &ListingIndex {
        &self.listing
    }

    pub fn majority_index(&self) -> Option<&MajorityIndex> {
        self.majority.as_ref()
    }

    pub fn minority_index(&self) -> Option<&MinorityIndex> {
        self.minority.as_ref()
    }

    #[doc(hidden)]
    pub fn majority_index_mut(&mut self) -> Option<&mut MajorityIndex> {
        self.majority.as_mut()
    }

    /// Original value of a dense symbol.
    pub fn original(&self, a: u32) -> u32 {
        self.remap[a as usize - 1]
    }

    /// Dense symbol of an original value, if it occurs.
    pub fn dense(&self, v: u32) -> Option<u32> {
        self.remap.binary_search(&v).ok().map(|x| x as u32 + 1)
    }

    /// The sequence in original values.
    pub fn decode(&self) -> Vec<u32> {
        self.seq.to_vec().into_iter().map(|a| self.original(a)).collect()
    }

    fn need_majority(&self) -> Result<&MajorityIndex> {
        self.majority
            .as_ref()
            .ok_or_else(|| Error::Config("index was built without majority structures".into()))
    }

    /// Majorities of `i..=j` in original values, ascending by dense symbol
    /// (which is value order).
    pub fn majorities(&self, i: usize, j: usize, tau: f64) -> Result<Answer<Vec<(u32, usize)>>> {
        let m = self.need_majority()?;
        let p = RangeParams::new(self.len(), i, j, tau)?;
        let mut ops = Counted::new(&self.seq);
        let found = m.query(&mut ops, &self.listing, &p)?;
        Ok(Answer {
            value: found.into_iter().map(|(a, c)| (self.original(a), c)).collect(),
            stats: ops.stats,
        })
    }

    pub fn minority(&self, i: usize, j: usize, tau: f64) -> Result<Answer<Option<(u32, usize)>>> {
        let m = self
            .minority
            .as_ref()
            .ok_or_else(|| Error::Config("index was built without minority structures".into()))?;
        let p = RangeParams::new(self.len(), i, j, tau)?;
        let mut ops = Counted::new(&self.seq);
        let found = m.query(&mut ops, &self.listing, &p)?;
        Ok(Answer {
            value: found.map(|(a, c)| (self.original(a), c)),
            stats: ops.stats,
        })
    }

    pub fn mode(&self, i: usize, j: usize) -> Result<Answer<(u32, usize)>> {
        let m = self.need_majority()?;
        let mut ops = Counted::new(&self.seq);
        let (a, c) = m.mode(&mut ops, &self.listing, i, j)?;
        Ok(Answer {
            value: (self.original(a), c),
            stats: ops.stats,
        })
    }

    /// Up to `limit` distinct values of `i..=j` with their leftmost
    /// positions.
    pub fn distinct(&self, i: usize, j: usize, limit: usize) -> Result<Answer<Vec<(u32, usize)>>> {
        let mut ops = Counted::new(&self.seq);
        let found = self.listing.list(&mut ops, i, j, limit)?;
        Ok(Answer {
            value: found.into_iter().map(|(a, k)| (self.original(a), k)).collect(),
            stats: ops.stats,
        })
    }

    /// Re-derives every majority candidate flag from the stored sequence.
    pub fn audit(&self) -> Result<()> {
        match &self.majority {
            Some(m) => m.audit(&self.seq.to_vec()),
            None => Ok(()),
        }
    }

    pub fn space(&self) -> SpaceReport {
        let n = self.len();
        let sigma = self.sigma();
        let sequence = self.seq.size_bits();
        let listing = self.listing.size_bits();
        let majority = self.majority.as_ref().map_or(0, |m| m.size_bits());
        let minority = self.minority.as_ref().map_or(0, |m| m.size_bits());
        let remap = 32 * self.remap.len() + 64;
        let mut families = Vec::new();
        if let Some(m) = &self.majority {
            for ((t, b), g, s) in m.family_bits() {
                families.push((format!("majority t={t} b={b} candidates"), g));
                if s > 0 {
                    families.push((format!("majority t={t} b={b} samples"), s));
                }
            }
        }
        if let Some(m) = &self.minority {
            for ((t, b), bits) in m.family_bits() {
                families.push((format!("minority t={t} b={b}"), bits));
            }
        }
        let code_bits = if sigma <= 1 { 0 } else { (sigma - 1).ilog2() as usize + 1 };
        SpaceReport {
            n,
            sigma,
            sequence,
            listing,
            majority,
            minority,
            remap,
            total: sequence + listing + majority + minority + remap,
            entropy_bits: n as f64 * self.seq.entropy_h0(),
            plain_bits: n * code_bits,
            families,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

fn write_config(w: &mut Writer, c: &IndexConfig) {
    w.u32(c.sequence.arity_bits);
    w.u8(c.sequence.compressed as u8);
    w.usize(c.listing_block);
    w.u8(c.with_majority as u8);
    w.u8(c.with_minority as u8);
    w.str(&c.describe());
}

fn read_config(r: &mut Reader<'_>) -> Result<(SequenceConfig, usize, bool, bool)> {
    let arity_bits = r.u32()?;
    let compressed = r.u8()? != 0;
    let listing_block = r.usize()?;
    let with_majority = r.u8()? != 0;
    let with_minority = r.u8()? != 0;
    let _summary = r.string()?;
    Ok((
        SequenceConfig {
            arity_bits,
            compressed,
        },
        listing_block,
        with_majority,
        with_minority,
    ))
}

impl Persist for RangeIndex {
    fn write_to(&self, w: &mut Writer) {
        w.bytes(FILE_MAGIC);
        w.u16(FILE_VERSION);
        w.usize(self.len());
        w.u32(self.sigma());
        write_config(w, &self.config);
        self.seq.write_to(w);
        self.listing.write_to(w);
        if let Some(m) = &self.majority {
            m.write_to(w);
        }
        if let Some(m) = &self.minority {
            m.write_to(w);
        }
        w.section(b"REMP", |w| w.u32s(&self.remap));
        w.section(b"ALPH", |w| match &self.alphabet {
            Alphabet::Integers => w.u8(0),
            Alphabet::Bytes => w.u8(1),
            Alphabet::Tokens(t) => {
                w.u8(2);
                w.usize(t.len());
                for s in t {
                    w.str(s);
                }
            }
        });
    }

    fn read_from(r: &mut Reader<'_>) -> Result<Self> {
        r.expect_bytes(FILE_MAGIC, "index file magic")?;
        let version = r.u16()?;
        if version != FILE_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FILE_VERSION,
            });
        }
        let n = r.usize()?;
        let sigma = r.u32()?;
        let (sequence, listing_block, with_majority, with_minority) = read_config(r)?;
        let seq = WaveletSequence::read_from(r)?;
        if seq.len() != n || seq.sigma() != sigma || seq.config() != sequence {
            return Err(Error::format("sequence section disagrees with the header"));
        }
        let listing = ListingIndex::read_from(r)?;
        if listing.block() != listing_block {
            return Err(Error::format("listing section disagrees with the header"));
        }
        let majority = if with_majority {
            Some(MajorityIndex::read_from(r)?)
        } else {
            None
        };
        let minority = if with_minority {
            Some(MinorityIndex::read_from(r)?)
        } else {
            None
        };
        let mut s = r.section(b"REMP")?;
        let remap = s.u32s()?;
        s.finish("symbol remap")?;
        if remap.len() != sigma as usize || remap.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::format("symbol remap is not strictly increasing over sigma values"));
        }
        let mut s = r.section(b"ALPH")?;
        let alphabet = match s.u8()? {
            0 => Alphabet::Integers,
            1 => Alphabet::Bytes,
            2 => {
                let count = s.usize()?;
                if count > s.remaining() {
                    return Err(Error::format("token table longer than its section"));
                }
                let mut t = Vec::with_capacity(count);
                for _ in 0..count {
                    t.push(s.string()?);
                }
                Alphabet::Tokens(t)
            }
            k => return Err(Error::format(format!("unknown alphabet kind {k}"))),
        };
        s.finish("alphabet")?;
        let config = IndexConfig {
            sequence,
            majority: majority.as_ref().map_or_else(MajorityConfig::default, |m| m.config()),
            minority: minority.as_ref().map_or_else(
                || MinorityConfig {
                    strategy: Strategy::Flags,
                    ..MinorityConfig::default()
                },
                |m| m.config(),
            ),
            listing_block,
            with_majority,
            with_minority,
        };
        Ok(Self {
            config,
            seq,
            listing,
            majority,
            minority,
            remap,
            alphabet,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert, prop_oneof, proptest, Just, ProptestConfig};
    use proptest::strategy::Strategy as Gen;

    use crate::verify::{check_query, config_variants, QueryKind};

    fn abracadabra() -> Vec<u32> {
        b"abracadabra".iter().map(|&c| c as u32).collect()
    }

    #[test]
    fn remapped_queries() {
        let idx = RangeIndex::build(&abracadabra(), IndexConfig::default()).unwrap();
        assert_eq!((idx.len(), idx.sigma()), (11, 5));
        assert_eq!(idx.majorities(4, 8, 0.5).unwrap().value, vec![(b'a' as u32, 3)]);
        assert_eq!(idx.mode(1, 11).unwrap().value, (b'a' as u32, 5));
        let (v, c) = idx.minority(1, 11, 0.1).unwrap().value.unwrap();
        assert!([b'c' as u32, b'd' as u32].contains(&v));
        assert_eq!(c, 1);
        assert_eq!(idx.decode(), abracadabra());
    }

    #[test]
    fn mode_iterations() {
        let s = [1, 2, 3, 1, 4, 1, 5, 1, 2, 3, 1];
        let idx = RangeIndex::build_identity(&s, 5, IndexConfig::default()).unwrap();
        let a = idx.mode(1, 11).unwrap();
        assert_eq!((a.value, a.stats.iterations), ((1, 5), 2));
        let a = idx.mode(3, 3).unwrap();
        assert_eq!((a.value, a.stats.iterations), ((3, 1), 1));
    }

    #[test]
    fn file_round_trip() {
        let idx = RangeIndex::build(&abracadabra(), IndexConfig::compact())
            .unwrap()
            .with_alphabet(Alphabet::Tokens(vec!["x".into(); 128]));
        let bytes = idx.to_bytes();
        let back = RangeIndex::from_bytes(&bytes).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.to_bytes(), bytes);
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(RangeIndex::from_bytes(&bad), Err(Error::Version { .. })));
        assert!(RangeIndex::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(RangeIndex::build(&[], IndexConfig::default()).is_err());
    }

    fn case() -> impl Gen<Value = (Vec<u32>, usize, usize, f64)> {
        (1u32..=40, 1usize..400)
            .prop_flat_map(|(sigma, n)| {
                (
                    prop::collection::vec(1..=sigma, n),
                    1..=n,
                    1..=n,
                    prop_oneof![Just(1.0), Just(0.5), 0.001f64..1.0, Just(1.0 / sigma as f64)],
                )
            })
            .prop_map(|(s, a, b, tau)| (s, a.min(b), a.max(b), tau))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn every_configuration_agrees_with_counting((s, i, j, tau) in case(), v in 0usize..8) {
            let config = config_variants()[v];
            let idx = RangeIndex::build(&s, config).unwrap();
            for kind in [QueryKind::Majority, QueryKind::Minority, QueryKind::Mode] {
                let m = check_query(&idx, &s, kind, i, j, tau).unwrap();
                prop_assert!(m.is_none(), "{}", m.unwrap());
            }
        }
    }
}
