//! Reference mechanisms the sliding-window code is compared against: a
//! systematic MDS block code and NACK-driven selective-repeat ARQ.

pub mod arq;
pub mod block;

pub use arq::ArqState;
pub use block::{block_decode, block_encode, BlockCode, BlockCodeConfig, BlockDecode, BlockError};
