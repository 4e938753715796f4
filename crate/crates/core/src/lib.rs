pub mod bits;
pub mod corpus;
mod digits;
pub mod error;
pub mod index;
pub mod listing;
pub mod majority;
pub mod minority;
mod occurrences;
pub mod oracle;
pub mod persist;
pub mod sequence;
pub mod stats;
pub mod swar;
pub mod threshold;
pub mod verify;

pub use error::{Error, Result};
pub use index::{Alphabet, Answer, IndexConfig, RangeIndex, SpaceReport};
