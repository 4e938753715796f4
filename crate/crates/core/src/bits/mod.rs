//! Bit-level building blocks: packed integers, rank/select bitvectors and
//! range-minimum queries.

mod bitvec;
mod intvec;
mod rmq;
mod sparse;
mod store;

pub use bitvec::{BitVector, BitVectorBuilder, BITS_VERSION};
pub(crate) use bitvec::select_in_word;
pub use intvec::IntVector;
pub use rmq::{RmqIndex, RmqSource};
pub use sparse::SparseBitVector;
pub use store::BitStore;
