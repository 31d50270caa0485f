//! Systematic Reed-Solomon style block code.
//!
//! The generator is an `n x k` Vandermonde matrix on the distinct points
//! `0, 1, ..., n-1`, right-multiplied by the inverse of its top `k x k`
//! block. The top block becomes the identity (sources go out verbatim) and
//! any `k` rows stay invertible, which is the MDS property.

use alloc::vec::Vec;

use thiserror::Error;

use crate::gf256::{Gf256, SymbolVector};
use crate::linalg::{invert, solve, LinalgError, LinearSystem, Solution};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("invalid block parameters k={k} n={n} (need 1 <= k < n <= 256)")]
    Config { k: usize, n: usize },
    #[error("expected {expected} source payloads, got {got}")]
    SourceCount { expected: usize, got: usize },
    #[error("source payload lengths differ")]
    Lengths,
    #[error("packet index {0} is duplicated or outside the block")]
    Index(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockCodeConfig {
    pub k: usize,
    pub n: usize,
}

impl BlockCodeConfig {
    pub fn validate(&self) -> Result<(), BlockError> {
        if self.k == 0 || self.k >= self.n || self.n > 256 {
            return Err(BlockError::Config { k: self.k, n: self.n });
        }
        Ok(())
    }

    pub fn redundancy(&self) -> f64 {
        (self.n - self.k) as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockDecode {
    Decoded(Vec<SymbolVector>),
    Unrecoverable,
}

#[derive(Debug, Clone)]
pub struct BlockCode {
    cfg: BlockCodeConfig,
    /// Rows `k..n` of the systematic generator.
    parity: Vec<Vec<Gf256>>,
}

impl BlockCode {
    pub fn new(cfg: BlockCodeConfig) -> Result<Self, BlockError> {
        cfg.validate()?;
        let vandermonde: Vec<Vec<Gf256>> = (0..cfg.n)
            .map(|i| (0..cfg.k).map(|j| Gf256(i as u8).pow(j as u32)).collect())
            .collect();
        let top_inv = invert(&vandermonde[..cfg.k]).expect("distinct Vandermonde points");
        let parity = vandermonde[cfg.k..]
            .iter()
            .map(|row| {
                (0..cfg.k)
                    .map(|c| {
                        row.iter()
                            .zip(&top_inv)
                            .fold(Gf256::ZERO, |acc, (&v, inv_row)| acc + v * inv_row[c])
                    })
                    .collect()
            })
            .collect();
        Ok(BlockCode { cfg, parity })
    }

    pub fn config(&self) -> BlockCodeConfig {
        self.cfg
    }

    /// Generator row for packet `index` of the block.
    pub fn generator_row(&self, index: usize) -> Vec<Gf256> {
        if index < self.cfg.k {
            (0..self.cfg.k)
                .map(|j| if j == index { Gf256::ONE } else { Gf256::ZERO })
                .collect()
        } else {
            self.parity[index - self.cfg.k].clone()
        }
    }

    pub fn encode(&self, block: &[SymbolVector]) -> Result<Vec<SymbolVector>, BlockError> {
        if block.len() != self.cfg.k {
            return Err(BlockError::SourceCount {
                expected: self.cfg.k,
                got: block.len(),
            });
        }
        let len = block[0].len();
        if block.iter().any(|b| b.len() != len) {
            return Err(BlockError::Lengths);
        }
        Ok(self
            .parity
            .iter()
            .map(|row| {
                let mut acc = SymbolVector::zeros(len);
                for (c, src) in row.iter().zip(block) {
                    acc.add_scaled(*c, src.as_bytes());
                }
                acc
            })
            .collect())
    }

    /// Rebuilds the `k` sources from any `k` distinct packets of the block.
    pub fn decode(&self, received: &[(usize, SymbolVector)]) -> Result<BlockDecode, BlockError> {
        let (k, n) = (self.cfg.k, self.cfg.n);
        let mut seen = [false; 256];
        for (idx, _) in received {
            if *idx >= n || seen[*idx] {
                return Err(BlockError::Index(*idx));
            }
            seen[*idx] = true;
        }
        if received.len() < k {
            return Ok(BlockDecode::Unrecoverable);
        }
        if (0..k).all(|i| seen[i]) {
            let mut out: Vec<SymbolVector> = alloc::vec![SymbolVector::default(); k];
            for (idx, v) in received {
                if *idx < k {
                    out[*idx] = v.clone();
                }
            }
            return Ok(BlockDecode::Decoded(out));
        }
        let chosen = &received[..k];
        let system = LinearSystem {
            coefficient_rows: chosen.iter().map(|(i, _)| self.generator_row(*i)).collect(),
            rhs_rows: chosen.iter().map(|(_, v)| v.clone()).collect(),
            column_ids: (0..k as u32).collect(),
        };
        match solve(&system)? {
            Solution::Solved(map) => Ok(BlockDecode::Decoded(map.into_values().collect())),
            Solution::Underdetermined { .. } => Ok(BlockDecode::Unrecoverable),
        }
    }
}

/// Repair payloads for one block of `k` equal-length sources.
pub fn block_encode(block: &[SymbolVector], config: BlockCodeConfig) -> Result<Vec<SymbolVector>, BlockError> {
    BlockCode::new(config)?.encode(block)
}

pub fn block_decode(received: &[(usize, SymbolVector)], config: BlockCodeConfig) -> Result<BlockDecode, BlockError> {
    BlockCode::new(config)?.decode(received)
}

/// Packs block position into the repair header's `coeff_seed` field.
pub fn block_seed(block_id: u16, index_in_block: u16) -> u32 {
    (block_id as u32) << 16 | index_in_block as u32
}

pub fn split_block_seed(seed: u32) -> (u16, u16) {
    ((seed >> 16) as u16, seed as u16)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn payloads(k: usize, len: usize) -> Vec<SymbolVector> {
        (0..k)
            .map(|i| SymbolVector::from((0..len).map(|j| (i * 31 + j * 7 + 1) as u8).collect::<Vec<_>>()))
            .collect()
    }

    #[test]
    fn repetition_code() {
        let src = payloads(1, 5);
        let cfg = BlockCodeConfig { k: 1, n: 2 };
        assert_eq!(block_encode(&src, cfg).unwrap(), src);
    }

    #[test]
    fn two_of_three_any_single_loss() {
        let cfg = BlockCodeConfig { k: 2, n: 3 };
        let src = payloads(2, 4);
        let rep = block_encode(&src, cfg).unwrap();
        let all = [src[0].clone(), src[1].clone(), rep[0].clone()];
        for lost in 0..3 {
            let rx: Vec<_> = (0..3).filter(|&i| i != lost).map(|i| (i, all[i].clone())).collect();
            assert_eq!(block_decode(&rx, cfg).unwrap(), BlockDecode::Decoded(src.clone()));
        }
    }

    #[test]
    fn systematic_and_bounds() {
        let cfg = BlockCodeConfig { k: 3, n: 5 };
        let src = payloads(3, 6);
        let rx: Vec<_> = src.iter().cloned().enumerate().collect();
        assert_eq!(block_decode(&rx, cfg).unwrap(), BlockDecode::Decoded(src.clone()));
        assert_eq!(block_decode(&rx[..2], cfg).unwrap(), BlockDecode::Unrecoverable);
    }

    #[test]
    fn index_errors() {
        let cfg = BlockCodeConfig { k: 2, n: 3 };
        let v = SymbolVector::zeros(1);
        assert_eq!(block_decode(&[(3, v.clone())], cfg), Err(BlockError::Index(3)));
        assert_eq!(
            block_decode(&[(1, v.clone()), (1, v)], cfg),
            Err(BlockError::Index(1))
        );
    }

    #[test]
    fn config_errors() {
        for (k, n) in [(0, 2), (3, 3), (4, 2), (10, 300)] {
            assert!(BlockCode::new(BlockCodeConfig { k, n }).is_err());
        }
        assert!(matches!(
            block_encode(&payloads(2, 3), BlockCodeConfig { k: 3, n: 4 }),
            Err(BlockError::SourceCount { .. })
        ));
        let mut bad = payloads(2, 3);
        bad[1].resize(4);
        assert_eq!(block_encode(&bad, BlockCodeConfig { k: 2, n: 4 }), Err(BlockError::Lengths));
    }

    #[test]
    fn seed_packing() {
        assert_eq!(block_seed(3, 7), 0x0003_0007);
        assert_eq!(split_block_seed(0x0003_0007), (3, 7));
    }
}
