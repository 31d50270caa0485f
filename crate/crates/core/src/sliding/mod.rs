//! On-the-fly sliding-window erasure coding.
//!
//! Every repair packet is a random linear combination of the whole elastic
//! window: the source packets the receiver has not yet acknowledged. Nothing
//! is retransmitted; acknowledgements only shrink the window.

mod coeffs;
mod decoder;
mod encoder;
mod packet;

pub use coeffs::{coded_symbols, coefficient, expand_coefficients, strip_symbols, XorShift32};
pub use decoder::{Decoder, DecoderConfig, InOrderShim, Release};
pub use encoder::{Encoder, EncoderConfig};
pub use packet::{AckPacket, RepairPacket, SourcePacket};

use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("encoding window would exceed {limit} packets")]
    WindowOverflow { limit: usize },
    #[error("payload of {len} bytes exceeds the {max} byte limit")]
    PayloadTooLarge { len: usize, max: usize },
    #[error("redundancy ratio {0} outside [0, 1)")]
    BadRatio(f64),
    #[error("decoded symbols for seq {0} are not a valid length-prefixed payload")]
    Corrupt(u32),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
