//! Big-endian wire formats.
//!
//! ```text
//! source   [0x01][seq:4][len:2][payload:len]
//! repair   [0x02][repair_seq:4][window_start:4][window_end:4][coeff_seed:4][len:2][payload:len]
//! ack      [0x03][cum_flag:1][cumulative_seq:4][extra_count:2][extra seqs:4 each]
//! feedback [0x04][recv_rate:8 micro-bytes/s][p:8 units of 1e-9][echo:4 us]
//! padding  [0x05][len:2][zeros:len]
//! ```
//!
//! Block-code repairs reuse the repair layout with
//! `coeff_seed = block_id << 16 | index_in_block` (see
//! [`block_seed`](crate::baselines::block::block_seed)).

use alloc::vec::Vec;

use thiserror::Error;

use crate::gf256::SymbolVector;
use crate::rate::FeedbackReport;
use crate::sliding::{AckPacket, RepairPacket, SourcePacket};

pub const TYPE_SOURCE: u8 = 0x01;
pub const TYPE_REPAIR: u8 = 0x02;
pub const TYPE_ACK: u8 = 0x03;
pub const TYPE_FEEDBACK: u8 = 0x04;
pub const TYPE_PADDING: u8 = 0x05;

pub const SOURCE_HEADER: usize = 7;
pub const REPAIR_HEADER: usize = 19;
pub const ACK_HEADER: usize = 8;
pub const FEEDBACK_LEN: usize = 21;
pub const PADDING_HEADER: usize = 3;

/// Largest source payload; keeps the padded repair symbol within the u16
/// length field.
pub const MAX_PAYLOAD: usize = 65_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("packet truncated")]
    Truncated,
    #[error("unknown packet type {0:#04x}")]
    UnknownType(u8),
    #[error("{0} trailing bytes after packet")]
    Trailing(usize),
    #[error("invalid cum_flag {0}")]
    BadFlag(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WirePacket {
    Source(SourcePacket),
    Repair(RepairPacket),
    Ack(AckPacket),
    Feedback(FeedbackReport),
    Padding(u16),
}

impl WirePacket {
    pub fn encoded_len(&self) -> usize {
        match self {
            WirePacket::Source(p) => SOURCE_HEADER + p.payload.len(),
            WirePacket::Repair(p) => REPAIR_HEADER + p.payload.len(),
            WirePacket::Ack(a) => ACK_HEADER + 4 * a.extra.len().min(u16::MAX as usize),
            WirePacket::Feedback(_) => FEEDBACK_LEN,
            WirePacket::Padding(n) => PADDING_HEADER + *n as usize,
        }
    }

    /// Serializes the packet. Payloads longer than 65535 bytes and ack
    /// lists longer than 65535 entries are truncated to fit their length
    /// fields; callers keep payloads within bounds.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        match self {
            WirePacket::Source(p) => {
                out.push(TYPE_SOURCE);
                out.extend_from_slice(&p.seq.to_be_bytes());
                put_payload(&mut out, &p.payload);
            }
            WirePacket::Repair(p) => {
                out.push(TYPE_REPAIR);
                out.extend_from_slice(&p.repair_seq.to_be_bytes());
                out.extend_from_slice(&p.window_start.to_be_bytes());
                out.extend_from_slice(&p.window_end.to_be_bytes());
                out.extend_from_slice(&p.coeff_seed.to_be_bytes());
                put_payload(&mut out, p.payload.as_bytes());
            }
            WirePacket::Ack(a) => {
                out.push(TYPE_ACK);
                out.push(a.cumulative.is_some() as u8);
                out.extend_from_slice(&a.cumulative.unwrap_or(0).to_be_bytes());
                let n = a.extra.len().min(u16::MAX as usize);
                out.extend_from_slice(&(n as u16).to_be_bytes());
                for s in &a.extra[..n] {
                    out.extend_from_slice(&s.to_be_bytes());
                }
            }
            WirePacket::Feedback(f) => {
                out.push(TYPE_FEEDBACK);
                out.extend_from_slice(&f.recv_rate_micro.to_be_bytes());
                out.extend_from_slice(&f.p_nano.to_be_bytes());
                out.extend_from_slice(&f.echo_us.to_be_bytes());
            }
            WirePacket::Padding(n) => {
                out.push(TYPE_PADDING);
                out.extend_from_slice(&n.to_be_bytes());
                out.resize(out.len() + *n as usize, 0);
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<WirePacket, WireError> {
        let mut r = Reader { bytes, pos: 0 };
        let pkt = match r.u8()? {
            TYPE_SOURCE => {
                let seq = r.u32()?;
                let payload = r.payload()?.to_vec();
                WirePacket::Source(SourcePacket { seq, payload })
            }
            TYPE_REPAIR => {
                let repair_seq = r.u32()?;
                let window_start = r.u32()?;
                let window_end = r.u32()?;
                let coeff_seed = r.u32()?;
                let payload = SymbolVector::from_bytes(r.payload()?);
                WirePacket::Repair(RepairPacket {
                    repair_seq,
                    window_start,
                    window_end,
                    coeff_seed,
                    payload,
                })
            }
            TYPE_ACK => {
                let flag = r.u8()?;
                if flag > 1 {
                    return Err(WireError::BadFlag(flag));
                }
                let cum = r.u32()?;
                // A cleared flag must carry a zero field for the encoding
                // to be canonical.
                if flag == 0 && cum != 0 {
                    return Err(WireError::BadFlag(flag));
                }
                let n = r.u16()? as usize;
                let mut extra = Vec::with_capacity(n);
                for _ in 0..n {
                    extra.push(r.u32()?);
                }
                WirePacket::Ack(AckPacket {
                    cumulative: (flag == 1).then_some(cum),
                    extra,
                })
            }
            TYPE_FEEDBACK => WirePacket::Feedback(FeedbackReport {
                recv_rate_micro: r.u64()?,
                p_nano: r.u64()?,
                echo_us: r.u32()?,
            }),
            TYPE_PADDING => {
                let n = r.u16()?;
                r.take(n as usize)?;
                WirePacket::Padding(n)
            }
            other => return Err(WireError::UnknownType(other)),
        };
        let left = bytes.len() - r.pos;
        if left != 0 {
            return Err(WireError::Trailing(left));
        }
        Ok(pkt)
    }
}

fn put_payload(out: &mut Vec<u8>, payload: &[u8]) {
    let n = payload.len().min(u16::MAX as usize);
    out.extend_from_slice(&(n as u16).to_be_bytes());
    out.extend_from_slice(&payload[..n]);
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(n).ok_or(WireError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(WireError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn payload(&mut self) -> Result<&'a [u8], WireError> {
        let n = self.u16()? as usize;
        self.take(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn source_layout() {
        let p = WirePacket::Source(SourcePacket {
            seq: 0x01020304,
            payload: vec![0xAA, 0xBB],
        });
        assert_eq!(p.encode(), vec![0x01, 1, 2, 3, 4, 0, 2, 0xAA, 0xBB]);
        assert_eq!(p.encoded_len(), 9);
    }

    #[test]
    fn repair_layout() {
        let p = WirePacket::Repair(RepairPacket {
            repair_seq: 1,
            window_start: 2,
            window_end: 3,
            coeff_seed: 4,
            payload: SymbolVector::from_bytes(&[9]),
        });
        assert_eq!(
            p.encode(),
            vec![0x02, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 4, 0, 1, 9]
        );
    }

    #[test]
    fn ack_layout() {
        let a = WirePacket::Ack(AckPacket {
            cumulative: Some(7),
            extra: vec![9],
        });
        assert_eq!(a.encode(), vec![0x03, 1, 0, 0, 0, 7, 0, 1, 0, 0, 0, 9]);
        let none = WirePacket::Ack(AckPacket::default());
        assert_eq!(none.encode(), vec![0x03, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn feedback_layout() {
        let f = WirePacket::Feedback(FeedbackReport {
            recv_rate_micro: 1,
            p_nano: 2,
            echo_us: 3,
        });
        let b = f.encode();
        assert_eq!(b.len(), FEEDBACK_LEN);
        assert_eq!(b[0], 0x04);
        assert_eq!(&b[1..9], &1u64.to_be_bytes());
        assert_eq!(&b[9..17], &2u64.to_be_bytes());
        assert_eq!(&b[17..21], &3u32.to_be_bytes());
    }

    #[test]
    fn decode_errors() {
        assert_eq!(WirePacket::decode(&[]), Err(WireError::Truncated));
        assert_eq!(WirePacket::decode(&[0x09]), Err(WireError::UnknownType(9)));
        assert_eq!(WirePacket::decode(&[0x01, 0, 0, 0, 0, 0, 2, 1]), Err(WireError::Truncated));
        assert_eq!(WirePacket::decode(&[0x05, 0, 0, 7]), Err(WireError::Trailing(1)));
        assert_eq!(
            WirePacket::decode(&[0x03, 2, 0, 0, 0, 0, 0, 0]),
            Err(WireError::BadFlag(2))
        );
    }
}
