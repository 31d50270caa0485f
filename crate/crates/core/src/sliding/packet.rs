use alloc::vec::Vec;

use crate::gf256::SymbolVector;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourcePacket {
    pub seq: u32,
    pub payload: Vec<u8>,
}

/// A combination of every source in `window_start..=window_end`, with
/// coefficients expanded from `coeff_seed`.
///
/// The payload combines length-prefixed, zero-padded source symbols (see
/// [`coded_symbols`](super::coded_symbols)), so its length is two more than
/// the largest source payload in the window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairPacket {
    pub repair_seq: u32,
    pub window_start: u32,
    pub window_end: u32,
    pub coeff_seed: u32,
    pub payload: SymbolVector,
}

impl RepairPacket {
    pub fn window_len(&self) -> usize {
        (self.window_end - self.window_start) as usize + 1
    }
}

/// Decoded-set acknowledgement.
///
/// `cumulative` is the highest seq such that everything up to it is
/// available at the receiver (`None` until seq 0 is). `extra` lists the
/// available seqs above it, ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AckPacket {
    pub cumulative: Option<u32>,
    pub extra: Vec<u32>,
}

impl AckPacket {
    pub fn covers(&self, seq: u32) -> bool {
        self.cumulative.is_some_and(|c| seq <= c) || self.extra.binary_search(&seq).is_ok()
    }

    /// Seqs between the cumulative point and the highest extra that are not
    /// listed, i.e. the gaps the receiver is still missing.
    pub fn gaps(&self) -> Vec<u32> {
        let Some(&top) = self.extra.last() else {
            return Vec::new();
        };
        let start = self.cumulative.map_or(0, |c| c + 1);
        (start..top).filter(|s| self.extra.binary_search(s).is_err()).collect()
    }
}
