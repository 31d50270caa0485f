use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;

use super::coeffs::{coded_symbols, coefficient};
use super::packet::{AckPacket, RepairPacket, SourcePacket};
use super::CodecError;
use crate::gf256::SymbolVector;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    /// Fraction of all emitted packets that are repairs, in [0, 1).
    pub redundancy_ratio: f64,
    /// Bound on the span `window_end - window_start + 1`.
    pub max_window: usize,
    pub max_payload: usize,
    /// Repair `i` carries `coeff_seed = seed_base + i`.
    pub seed_base: u32,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            redundancy_ratio: 0.125,
            max_window: 2048,
            max_payload: crate::wire::MAX_PAYLOAD,
            seed_base: 0,
        }
    }
}

impl EncoderConfig {
    /// Sources between consecutive repairs: `round(1/ratio) - 1`, or `None`
    /// when coding is off.
    pub fn sources_per_repair(&self) -> Option<u32> {
        if self.redundancy_ratio <= 0.0 {
            return None;
        }
        let n = libm::round(1.0 / self.redundancy_ratio) as i64 - 1;
        Some(n.max(1) as u32)
    }
}

/// Sender side of the sliding-window code.
#[derive(Debug, Clone)]
pub struct Encoder {
    cfg: EncoderConfig,
    sources_per_repair: Option<u32>,
    /// Coded symbols from the oldest unacknowledged source up to the newest
    /// one. The front entry is always unacknowledged.
    buffer: VecDeque<(u32, SymbolVector)>,
    /// Acknowledged seqs still inside `buffer`.
    acked: BTreeSet<u32>,
    /// Newest source, kept so a repair slot can still be filled when every
    /// source is acknowledged.
    newest: Option<(u32, SymbolVector)>,
    cumulative: Option<u32>,
    next_seq: u32,
    next_repair_seq: u32,
    source_since_repair: u32,
}

impl Encoder {
    pub fn new(cfg: EncoderConfig) -> Result<Self, CodecError> {
        if !(0.0..1.0).contains(&cfg.redundancy_ratio) {
            return Err(CodecError::BadRatio(cfg.redundancy_ratio));
        }
        Ok(Encoder {
            sources_per_repair: cfg.sources_per_repair(),
            cfg,
            buffer: VecDeque::new(),
            acked: BTreeSet::new(),
            newest: None,
            cumulative: None,
            next_seq: 0,
            next_repair_seq: 0,
            source_since_repair: 0,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.cfg
    }

    pub fn next_seq(&self) -> u32 {
        self.next_seq
    }

    pub fn next_repair_seq(&self) -> u32 {
        self.next_repair_seq
    }

    pub fn source_since_repair(&self) -> u32 {
        self.source_since_repair
    }

    /// Sent but not yet acknowledged seqs, ascending.
    pub fn window(&self) -> Vec<u32> {
        self.buffer
            .iter()
            .map(|(s, _)| *s)
            .filter(|s| !self.acked.contains(s))
            .collect()
    }

    /// Number of source payloads retained, i.e. the span a repair covers.
    pub fn span(&self) -> usize {
        self.buffer.len()
    }

    pub fn push_source(&mut self, payload: &[u8]) -> Result<SourcePacket, CodecError> {
        if payload.len() > self.cfg.max_payload {
            return Err(CodecError::PayloadTooLarge {
                len: payload.len(),
                max: self.cfg.max_payload,
            });
        }
        if self.buffer.len() >= self.cfg.max_window {
            return Err(CodecError::WindowOverflow {
                limit: self.cfg.max_window,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        let coded = coded_symbols(payload);
        self.buffer.push_back((seq, coded.clone()));
        self.newest = Some((seq, coded));
        self.source_since_repair += 1;
        Ok(SourcePacket {
            seq,
            payload: payload.to_vec(),
        })
    }

    /// Payload length of the repair [`emit_repair`](Self::emit_repair)
    /// would build now.
    pub fn repair_len(&self) -> usize {
        match self.buffer.iter().map(|(_, v)| v.len()).max() {
            Some(n) => n,
            None => self.newest.as_ref().map_or(0, |(_, v)| v.len()),
        }
    }

    /// Whether the `S^(n) R` interleave calls for a repair now.
    pub fn next_is_repair(&self) -> bool {
        self.sources_per_repair
            .is_some_and(|n| self.source_since_repair >= n)
    }

    /// Builds a repair over the current window without consuming it.
    ///
    /// When everything sent is already acknowledged the repair covers just
    /// the newest source, which keeps the emission schedule independent of
    /// feedback timing. Returns `None` only before the first source.
    pub fn emit_repair(&mut self) -> Option<RepairPacket> {
        let (window_start, window_end, payload) = if let (Some(front), Some(back)) =
            (self.buffer.front(), self.buffer.back())
        {
            let seed = self.cfg.seed_base.wrapping_add(self.next_repair_seq);
            let len = self.buffer.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
            let mut acc = SymbolVector::zeros(len);
            for (seq, symbols) in &self.buffer {
                acc.add_scaled(coefficient(seed, *seq), symbols.as_bytes());
            }
            (front.0, back.0, acc)
        } else {
            let (seq, symbols) = self.newest.as_ref()?;
            let seed = self.cfg.seed_base.wrapping_add(self.next_repair_seq);
            let mut acc = SymbolVector::zeros(symbols.len());
            acc.add_scaled(coefficient(seed, *seq), symbols.as_bytes());
            (*seq, *seq, acc)
        };
        let pkt = RepairPacket {
            repair_seq: self.next_repair_seq,
            window_start,
            window_end,
            coeff_seed: self.cfg.seed_base.wrapping_add(self.next_repair_seq),
            payload,
        };
        self.next_repair_seq += 1;
        self.source_since_repair = 0;
        Some(pkt)
    }

    /// Prunes acknowledged sources. Idempotent; stale acks never re-add.
    pub fn on_ack(&mut self, ack: &AckPacket) {
        if let Some(c) = ack.cumulative {
            if c < self.next_seq {
                self.cumulative = Some(self.cumulative.map_or(c, |prev| prev.max(c)));
            }
        }
        let floor = self.buffer.front().map_or(self.next_seq, |f| f.0);
        for &s in &ack.extra {
            if s >= floor && s < self.next_seq {
                self.acked.insert(s);
            }
        }
        while let Some(&(front, _)) = self.buffer.front() {
            let covered = self.cumulative.is_some_and(|c| front <= c) || self.acked.contains(&front);
            if !covered {
                break;
            }
            self.buffer.pop_front();
            self.acked.remove(&front);
        }
        if let Some(c) = self.cumulative {
            self.acked = self.acked.split_off(&(c + 1));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn enc(ratio: f64) -> Encoder {
        Encoder::new(EncoderConfig {
            redundancy_ratio: ratio,
            ..EncoderConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn sequence_numbers_and_window() {
        let mut e = enc(0.125);
        assert_eq!(e.push_source(b"a").unwrap().seq, 0);
        assert_eq!(e.push_source(b"b").unwrap().seq, 1);
        assert_eq!(e.push_source(b"c").unwrap().seq, 2);
        assert_eq!(e.window(), vec![0, 1, 2]);
    }

    #[test]
    fn push_after_ack_leaves_only_new_packet() {
        let mut e = enc(0.125);
        for _ in 0..10 {
            e.push_source(b"x").unwrap();
        }
        e.on_ack(&AckPacket {
            cumulative: Some(9),
            extra: vec![],
        });
        e.push_source(b"y").unwrap();
        assert_eq!(e.window(), vec![10]);
    }

    #[test]
    fn ack_set_subtraction_and_idempotence() {
        let mut e = enc(0.125);
        for _ in 0..10 {
            e.push_source(b"x").unwrap();
        }
        e.on_ack(&AckPacket::default());
        assert_eq!(e.window(), (0..10).collect::<Vec<_>>());
        let ack = AckPacket {
            cumulative: Some(4),
            extra: vec![7],
        };
        e.on_ack(&ack);
        assert_eq!(e.window(), vec![5, 6, 8, 9]);
        e.on_ack(&ack);
        assert_eq!(e.window(), vec![5, 6, 8, 9]);
        // stale cumulative ack is harmless
        e.on_ack(&AckPacket {
            cumulative: Some(1),
            extra: vec![],
        });
        assert_eq!(e.window(), vec![5, 6, 8, 9]);
    }

    #[test]
    fn emission_pattern() {
        let mut e = enc(0.125);
        let mut pattern = Vec::new();
        for _ in 0..32 {
            if e.next_is_repair() {
                e.emit_repair().unwrap();
                pattern.push('R');
            } else {
                e.push_source(b"s").unwrap();
                pattern.push('S');
            }
        }
        let s: alloc::string::String = pattern.into_iter().collect();
        assert_eq!(s, "SSSSSSSRSSSSSSSRSSSSSSSRSSSSSSSR");

        let mut e = enc(0.5);
        e.push_source(b"s").unwrap();
        assert!(e.next_is_repair());
        e.emit_repair();
        assert!(!e.next_is_repair());

        let mut e = enc(0.0);
        for _ in 0..100 {
            e.push_source(b"s").unwrap();
            assert!(!e.next_is_repair());
        }
    }

    #[test]
    fn repair_before_any_source_is_noop() {
        assert!(enc(0.5).emit_repair().is_none());
    }

    #[test]
    fn fully_acked_window_repairs_newest_source() {
        let mut e = enc(0.5);
        e.push_source(b"a").unwrap();
        e.push_source(b"b").unwrap();
        e.on_ack(&AckPacket {
            cumulative: Some(1),
            extra: vec![],
        });
        let r = e.emit_repair().unwrap();
        assert_eq!((r.window_start, r.window_end), (1, 1));
    }

    #[test]
    fn window_overflow_is_an_error() {
        let mut e = Encoder::new(EncoderConfig {
            max_window: 3,
            ..EncoderConfig::default()
        })
        .unwrap();
        for _ in 0..3 {
            e.push_source(b"x").unwrap();
        }
        assert_eq!(
            e.push_source(b"x"),
            Err(CodecError::WindowOverflow { limit: 3 })
        );
    }

    #[test]
    fn oversize_payload_rejected() {
        let mut e = Encoder::new(EncoderConfig {
            max_payload: 4,
            ..EncoderConfig::default()
        })
        .unwrap();
        assert!(matches!(
            e.push_source(&[0; 5]),
            Err(CodecError::PayloadTooLarge { len: 5, max: 4 })
        ));
    }

    #[test]
    fn bad_ratio_rejected() {
        assert!(Encoder::new(EncoderConfig {
            redundancy_ratio: 1.0,
            ..EncoderConfig::default()
        })
        .is_err());
    }
}
