//! Protocol laboratory core: GF(2^8) linear algebra, an on-the-fly
//! sliding-window erasure codec with acknowledgement-pruned windows, block
//! code and selective-repeat ARQ baselines, TFRC-style rate control, video
//! traffic models and a deterministic discrete-event simulator.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel sweeps live in the `fecsim` companion crate.

#![no_std]
// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod gf256;
pub mod linalg;
pub mod metrics;
pub mod netsim;
pub mod rate;
pub mod scenario;
pub mod sliding;
pub mod time;
pub mod traffic;
pub mod wire;

pub use gf256::{Gf256, SymbolVector};
pub use time::SimTime;
