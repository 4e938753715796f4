use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rfq::majority::{Dispatch, VerifyMode};
use rfq::minority::Strategy;
use rfq::stats::QueryStats;
use rfq::verify::{self, QueryKind};
use rfq::{corpus, Alphabet, Error, IndexConfig, RangeIndex};

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "rfq", version, about = "Range majority, minority and mode queries over compressed sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index an input file.
    Build(BuildArgs),
    /// Answer one query against an index file.
    Query(QueryArgs),
    /// Compare random queries against brute-force counting.
    Verify(VerifyArgs),
    /// Time queries over a grid of thresholds and range lengths; CSV output.
    Bench(BenchArgs),
    /// Describe an index file.
    Info {
        index: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    /// One symbol per byte.
    Bytes,
    /// Little-endian 32-bit integers.
    U32le,
    /// Whitespace-separated tokens.
    Tokens,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyArg {
    Rank,
    Check,
}

#[derive(Clone, Copy, ValueEnum)]
enum MinorityArg {
    Flags,
    Listing,
}

#[derive(Clone, Copy, ValueEnum)]
enum DispatchArg {
    Auto,
    Sequential,
    Flagged,
}

#[derive(Args)]
struct BuildArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "bytes")]
    format: InputFormat,
    /// Bits per wavelet tree digit (arity 2^bits).
    #[arg(long, default_value_t = 1)]
    arity_bits: u32,
    /// Use sparse encodings for sequence bitvectors where smaller.
    #[arg(long)]
    compressed: bool,
    /// Time/space trade g: short-range cutoff and listing block length.
    #[arg(long, default_value_t = 1)]
    trade: usize,
    /// Occurrences per chunk for the sampled families.
    #[arg(long, default_value_t = 1024)]
    chunk_len: usize,
    #[arg(long, value_enum, default_value = "rank")]
    verify: VerifyArg,
    #[arg(long, value_enum, default_value = "flags")]
    minority: MinorityArg,
    #[arg(long, value_enum, default_value = "auto")]
    dispatch: DispatchArg,
    #[arg(long)]
    no_majority: bool,
    #[arg(long)]
    no_minority: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum KindArg {
    Majority,
    Minority,
    Mode,
}

#[derive(Args)]
struct QueryArgs {
    index: PathBuf,
    #[arg(value_enum)]
    kind: KindArg,
    /// First position, 1-based.
    #[arg(short, long)]
    i: usize,
    /// Last position, inclusive.
    #[arg(short, long)]
    j: usize,
    /// Threshold in (0, 1]; not used by mode queries.
    #[arg(short, long)]
    tau: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    cases: usize,
    /// Queries of each kind per case.
    #[arg(long, default_value_t = 20)]
    queries: usize,
    #[arg(long, env = "RFQ_SEED", default_value_t = 1)]
    seed: u64,
    /// Corrupt the candidate flags of one symbol first; the run must then fail.
    #[arg(long)]
    inject_fault: bool,
}

#[derive(Args)]
struct BenchArgs {
    index: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.125,0.015625")]
    taus: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    lens: Vec<usize>,
    #[arg(long, default_value_t = 21)]
    reps: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "majority,minority,mode")]
    kinds: Vec<KindArg>,
    #[arg(long, env = "RFQ_SEED", default_value_t = 1)]
    seed: u64,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let err = e.into();
        let code = match err.downcast_ref::<Error>() {
            Some(Error::Io(_) | Error::Format(_) | Error::Version { .. }) => EXIT_IO,
            Some(Error::OutOfRange { .. } | Error::Domain { .. } | Error::Config(_)) => EXIT_USAGE,
            _ if err.downcast_ref::<std::io::Error>().is_some() => EXIT_IO,
            _ => EXIT_MISMATCH,
        };
        Failure { code, err }
    }
}

fn main() -> ExitCode {
    // Exit quietly when stdout is closed early, e.g. `rfq info x | head`.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => build(a),
        Command::Query(a) => query(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Info { index, json } => info(&index, json),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn read_input(path: &Path, format: InputFormat) -> Result<(Vec<u32>, Alphabet), Failure> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let out = match format {
        InputFormat::Bytes => (bytes.iter().map(|&b| b as u32).collect(), Alphabet::Bytes),
        InputFormat::U32le => {
            if bytes.len() % 4 != 0 {
                return Err(Failure {
                    code: EXIT_USAGE,
                    err: anyhow::anyhow!("{}: length {} is not a multiple of 4", path.display(), bytes.len()),
                });
            }
            let v: Vec<u32> = bytes
                .chunks_exact(4)
                .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            (v, Alphabet::Integers)
        }
        InputFormat::Tokens => {
            let text = String::from_utf8(bytes).context("token input is not UTF-8")?;
            let words: Vec<&str> = text.split_whitespace().collect();
            let mut table: Vec<String> = words.iter().map(|w| w.to_string()).collect();
            table.sort_unstable();
            table.dedup();
            let ids = words
                .iter()
                .map(|w| table.binary_search_by(|t| t.as_str().cmp(w)).unwrap() as u32)
                .collect();
            (ids, Alphabet::Tokens(table))
        }
    };
    if out.0.is_empty() {
        return Err(Failure {
            code: EXIT_USAGE,
            err: anyhow::anyhow!("{}: input is empty", path.display()),
        });
    }
    Ok(out)
}

fn build_config(a: &BuildArgs) -> IndexConfig {
    let mut c = IndexConfig::default()
        .with_trade(a.trade)
        .with_verify(match a.verify {
            VerifyArg::Rank => VerifyMode::Rank,
            VerifyArg::Check => VerifyMode::CheckLemma,
        })
        .with_dispatch(match a.dispatch {
            DispatchArg::Auto => Dispatch::Auto,
            DispatchArg::Sequential => Dispatch::ForceSequential,
            DispatchArg::Flagged => Dispatch::ForceFlagged,
        });
    c.sequence.arity_bits = a.arity_bits;
    c.sequence.compressed = a.compressed;
    c.majority.chunk_len = a.chunk_len;
    c.minority.strategy = match a.minority {
        MinorityArg::Flags => Strategy::Flags,
        MinorityArg::Listing => Strategy::Listing,
    };
    c.with_majority = !a.no_majority;
    c.with_minority = !a.no_minority;
    c
}

#[derive(Serialize)]
struct SpaceJson {
    n: usize,
    sigma: u32,
    total_bits: usize,
    sequence_bits: usize,
    listing_bits: usize,
    majority_bits: usize,
    minority_bits: usize,
    remap_bits: usize,
    entropy_bits: f64,
    plain_bits: usize,
    total_over_entropy: f64,
    total_over_plain: f64,
    families: Vec<(String, usize)>,
}

fn space_json(idx: &RangeIndex) -> SpaceJson {
    let s = idx.space();
    SpaceJson {
        n: s.n,
        sigma: s.sigma,
        total_bits: s.total,
        sequence_bits: s.sequence,
        listing_bits: s.listing,
        majority_bits: s.majority,
        minority_bits: s.minority,
        remap_bits: s.remap,
        entropy_bits: s.entropy_bits,
        plain_bits: s.plain_bits,
        total_over_entropy: s.total as f64 / s.entropy_bits.max(1.0),
        total_over_plain: s.total as f64 / (s.plain_bits.max(1)) as f64,
        families: s.families,
    }
}

fn print_space(s: &SpaceJson) {
    println!("n = {}, sigma = {}", s.n, s.sigma);
    println!("total bits      {:>14} ({:.3} per symbol)", s.total_bits, s.total_bits as f64 / s.n as f64);
    println!("  sequence      {:>14}", s.sequence_bits);
    println!("  listing       {:>14}", s.listing_bits);
    println!("  majority      {:>14}", s.majority_bits);
    println!("  minority      {:>14}", s.minority_bits);
    println!("  remap         {:>14}", s.remap_bits);
    println!("n*H0 baseline   {:>14.0} (total/nH0 = {:.3})", s.entropy_bits, s.total_over_entropy);
    println!("n*ceil(lg sigma){:>14} (total/plain = {:.3})", s.plain_bits, s.total_over_plain);
    for (name, bits) in &s.families {
        println!("  {name:<36} {bits:>10}");
    }
}

fn build(a: BuildArgs) -> Result<u8, Failure> {
    let (raw, alphabet) = read_input(&a.input, a.format)?;
    let idx = RangeIndex::build(&raw, build_config(&a))?.with_alphabet(alphabet);
    idx.save(&a.output)?;
    let s = space_json(&idx);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&s)?);
    } else {
        println!("wrote {}", a.output.display());
        print_space(&s);
        if let Some(m) = idx.majority_index() {
            for w in m.warnings() {
                println!("warning: {w}");
            }
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct Diagnostics {
    path: &'static str,
    candidates: usize,
    accesses: usize,
    ranks: usize,
    partial_ranks: usize,
    selects: usize,
    listing_steps: usize,
    iterations: usize,
    elapsed_ns: u128,
}

fn diagnostics(s: &QueryStats, elapsed_ns: u128) -> Diagnostics {
    Diagnostics {
        path: s.path.name(),
        candidates: s.candidates,
        accesses: s.accesses,
        ranks: s.ranks,
        partial_ranks: s.partial_ranks,
        selects: s.selects,
        listing_steps: s.listing_steps,
        iterations: s.iterations,
        elapsed_ns,
    }
}

#[derive(Serialize)]
struct Found {
    symbol: u32,
    label: String,
    count: usize,
}

#[derive(Serialize)]
struct QueryReport {
    kind: &'static str,
    i: usize,
    j: usize,
    tau: Option<f64>,
    results: Vec<Found>,
    diagnostics: Diagnostics,
}

fn load(path: &Path) -> Result<RangeIndex, Failure> {
    Ok(RangeIndex::load(path)?)
}

fn query(a: QueryArgs) -> Result<u8, Failure> {
    let idx = load(&a.index)?;
    let tau = match (a.kind, a.tau) {
        (KindArg::Mode, _) => None,
        (_, Some(t)) => Some(t),
        (_, None) => {
            return Err(Failure {
                code: EXIT_USAGE,
                err: anyhow::anyhow!("--tau is required for majority and minority queries"),
            })
        }
    };
    let start = Instant::now();
    let (found, stats, kind) = match a.kind {
        KindArg::Majority => {
            let r = idx.majorities(a.i, a.j, tau.unwrap())?;
            (r.value, r.stats, "majority")
        }
        KindArg::Minority => {
            let r = idx.minority(a.i, a.j, tau.unwrap())?;
            (r.value.into_iter().collect(), r.stats, "minority")
        }
        KindArg::Mode => {
            let r = idx.mode(a.i, a.j)?;
            (vec![r.value], r.stats, "mode")
        }
    };
    let elapsed = start.elapsed().as_nanos();
    let report = QueryReport {
        kind,
        i: a.i,
        j: a.j,
        tau,
        results: found
            .into_iter()
            .map(|(v, c)| Found {
                symbol: v,
                label: idx.alphabet().render(v),
                count: c,
            })
            .collect(),
        diagnostics: diagnostics(&stats, elapsed),
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        match tau {
            Some(t) => println!("{kind} query i={} j={} tau={t}", a.i, a.j),
            None => println!("{kind} query i={} j={}", a.i, a.j),
        }
        if report.results.is_empty() {
            println!("  none");
        }
        for f in &report.results {
            println!("  {} count={}", f.label, f.count);
        }
        let d = &report.diagnostics;
        println!(
            "  path={} candidates={} accesses={} ranks={} partial_ranks={} selects={} elapsed={}ns",
            d.path, d.candidates, d.accesses, d.ranks, d.partial_ranks, d.selects, d.elapsed_ns
        );
    }
    Ok(0)
}

fn verify_cmd(a: VerifyArgs) -> Result<u8, Failure> {
    if a.inject_fault {
        return fault_run(a.seed);
    }
    let report = verify::run_suite(a.cases, a.queries, a.seed);
    println!(
        "seed {}: {} cases, {} queries, {} mismatches, {} errors",
        a.seed,
        report.cases,
        report.queries,
        report.failures.len(),
        report.errors.len()
    );
    for e in &report.errors {
        println!("error: {e}");
    }
    for m in &report.failures {
        println!("minimized reproducer:\n{m}");
    }
    if report.passed() {
        println!("PASS");
        Ok(0)
    } else {
        println!("FAIL");
        Ok(EXIT_MISMATCH)
    }
}

/// Flips single candidate flags of a freshly built index until a query
/// exposes the corruption, then reports it like any other mismatch.
fn fault_run(seed: u64) -> Result<u8, Failure> {
    let mut rng = corpus::rng(seed);
    let raw = corpus::runs(&mut rng, 1024, 4, 48);
    let config = IndexConfig::default().with_dispatch(Dispatch::ForceFlagged);
    let clean = RangeIndex::build(&raw, config)?;
    let dense = clean.sequence().to_vec();
    let m = clean.majority_index().expect("majority structures are built");
    let mut tries = 0;
    for (t, b) in m.family_keys() {
        let flags = m.candidate_flags(t, b).unwrap_or_default();
        let mut seen = Vec::new();
        for &k in &flags {
            let v = raw[k - 1];
            if tries == 200 || seen.contains(&v) {
                continue;
            }
            seen.push(v);
            tries += 1;
            let faulty = |s: &[u32]| -> rfq::Result<RangeIndex> {
                let mut idx = RangeIndex::build(s, config)?;
                clear_symbol_flags(&mut idx, v, (t, b))?;
                Ok(idx)
            };
            let idx = faulty(&raw)?;
            let audit = idx.majority_index().unwrap().audit(&dense);
            if let Some(found) = verify::probe_around(&idx, &clean, &raw, k, (t, b)) {
                println!("injected fault: candidate flags of symbol {v} cleared in family t={t} b={b}");
                if let Err(e) = audit {
                    println!("audit: {e}");
                }
                let small = verify::minimize(&found, faulty);
                println!("minimized reproducer:\n{small}");
                println!("FAIL");
                return Ok(EXIT_MISMATCH);
            }
        }
    }
    println!("no injected fault changed a query answer in {tries} attempts");
    println!("FAIL");
    Ok(EXIT_MISMATCH)
}

/// Clears every candidate flag of original symbol `v` in one family.
fn clear_symbol_flags(idx: &mut RangeIndex, v: u32, (t, b): (u32, u32)) -> rfq::Result<()> {
    let Some(a) = idx.dense(v) else { return Ok(()) };
    let dense = idx.sequence().to_vec();
    let Some(m) = idx.majority_index_mut() else { return Ok(()) };
    let Some(flags) = m.candidate_flags(t, b) else { return Ok(()) };
    for p in flags.into_iter().filter(|&p| dense[p - 1] == a) {
        m.inject_fault(t, b, p)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BenchRow {
    tau: f64,
    len: usize,
    kind: &'static str,
    median_ns: u128,
    candidates: usize,
    selects: usize,
    ranks: usize,
    partial_ranks: usize,
}

fn bench(a: BenchArgs) -> Result<u8, Failure> {
    let idx = load(&a.index)?;
    if a.reps == 0 {
        return Err(Failure {
            code: EXIT_USAGE,
            err: anyhow::anyhow!("--reps must be at least 1"),
        });
    }
    let mut rng = corpus::rng(a.seed);
    let mut out = csv::Writer::from_writer(std::io::stdout());
    for &kind in &a.kinds {
        let (name, qk) = match kind {
            KindArg::Majority => ("majority", QueryKind::Majority),
            KindArg::Minority => ("minority", QueryKind::Minority),
            KindArg::Mode => ("mode", QueryKind::Mode),
        };
        for &tau in &a.taus {
            for &len in &a.lens {
                let mut times = Vec::with_capacity(a.reps);
                let mut stats = QueryStats::default();
                for _ in 0..a.reps {
                    let (i, j) = corpus::range_of_len(&mut rng, idx.len(), len);
                    let start = Instant::now();
                    let s = match qk {
                        QueryKind::Majority => idx.majorities(i, j, tau)?.stats,
                        QueryKind::Minority => idx.minority(i, j, tau)?.stats,
                        QueryKind::Mode => idx.mode(i, j)?.stats,
                    };
                    times.push(start.elapsed().as_nanos());
                    stats.absorb(&s);
                }
                times.sort_unstable();
                let per = |x: usize| x.div_ceil(a.reps);
                out.serialize(BenchRow {
                    tau,
                    len: len.min(idx.len()),
                    kind: name,
                    median_ns: times[times.len() / 2],
                    candidates: per(stats.candidates),
                    selects: per(stats.selects),
                    ranks: per(stats.ranks),
                    partial_ranks: per(stats.partial_ranks),
                })?;
            }
        }
    }
    out.flush()?;
    Ok(0)
}

#[derive(Serialize)]
struct InfoJson {
    n: usize,
    sigma: u32,
    alphabet: &'static str,
    config: String,
    majority_families: Vec<(u32, u32)>,
    minority_families: Vec<(u32, u32)>,
    space: SpaceJson,
}

fn info(path: &Path, json: bool) -> Result<u8, Failure> {
    let idx = load(path)?;
    let info = InfoJson {
        n: idx.len(),
        sigma: idx.sigma(),
        alphabet: idx.alphabet().name(),
        config: idx.config().describe(),
        majority_families: idx.majority_index().map(|m| m.family_keys()).unwrap_or_default(),
        minority_families: idx.minority_index().map(|m| m.family_keys()).unwrap_or_default(),
        space: space_json(&idx),
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&info)?);
    } else {
        println!("{}", path.display());
        println!("alphabet: {}", info.alphabet);
        println!("config: {}", info.config);
        println!("majority families (t, b): {:?}", info.majority_families);
        println!("minority families (t, b): {:?}", info.minority_families);
        print_space(&info.space);
    }
    Ok(0)
}
