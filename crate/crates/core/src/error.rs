use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A position or range argument falls outside the valid domain.
    #[error("{what} out of range: {value} not in [{lo}..={hi}]")]
    OutOfRange {
        what: &'static str,
        value: usize,
        lo: usize,
        hi: usize,
    },

    /// A select asked for a rank beyond the number of set bits.
    #[error("rank {rank} not found (only {available} available)")]
    NotFound { rank: usize, available: usize },

    /// An argument is of the right type but not an admissible value
    /// (symbol outside the alphabet, threshold outside (0, 1], ...).
    #[error("invalid {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed index data: {0}")]
    Format(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },

    /// A build-time self-check found a structure that disagrees with its
    /// definition.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("logic error: {0}")]
    Logic(String),
}

impl Error {
    pub(crate) fn range(what: &'static str, value: usize, lo: usize, hi: usize) -> Self {
        Error::OutOfRange { what, value, lo, hi }
    }

    pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn format(detail: impl Into<String>) -> Self {
        Error::Format(detail.into())
    }
}
