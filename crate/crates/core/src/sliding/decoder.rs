use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::coeffs::{coded_symbols, coefficient, strip_symbols};
use super::packet::{AckPacket, RepairPacket, SourcePacket};
use super::CodecError;
use crate::gf256::SymbolVector;
use crate::linalg::{Eliminator, Pinned, Row};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecoderConfig {
    /// Must match the encoder's bound; payloads of delivered sources are
    /// retained for this many seqs behind the newest one seen.
    pub max_window: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig { max_window: 2048 }
    }
}

/// A source packet that just became available.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Release {
    pub seq: u32,
    pub payload: Vec<u8>,
    pub at: SimTime,
    /// Rebuilt from repairs rather than received.
    pub recovered: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Decoder {
    cfg: DecoderConfig,
    cumulative: Option<u32>,
    delivered_above: BTreeSet<u32>,
    missing: BTreeSet<u32>,
    highest: Option<u32>,
    /// Coded symbols of delivered sources, for substitution into repairs.
    retained: BTreeMap<u32, SymbolVector>,
    system: Eliminator,
    abandoned: u64,
}

impl Decoder {
    pub fn new(cfg: DecoderConfig) -> Self {
        Decoder {
            cfg,
            ..Default::default()
        }
    }

    pub fn is_delivered(&self, seq: u32) -> bool {
        self.cumulative.is_some_and(|c| seq <= c) || self.delivered_above.contains(&seq)
    }

    pub fn missing(&self) -> &BTreeSet<u32> {
        &self.missing
    }

    pub fn pending_rows(&self) -> usize {
        self.system.rank()
    }

    /// Missing seqs that fell behind the retention horizon and can no longer
    /// be rebuilt.
    pub fn abandoned(&self) -> u64 {
        self.abandoned
    }

    pub fn on_source(&mut self, pkt: &SourcePacket, now: SimTime) -> Result<Vec<Release>, CodecError> {
        if self.is_delivered(pkt.seq) {
            return Ok(Vec::new());
        }
        self.note_sent_up_to(pkt.seq);
        let symbols = coded_symbols(&pkt.payload);
        let mut out = alloc::vec![Release {
            seq: pkt.seq,
            payload: pkt.payload.clone(),
            at: now,
            recovered: false,
        }];
        let was_missing = self.missing.remove(&pkt.seq);
        self.mark_delivered(pkt.seq, symbols.clone());
        if was_missing {
            let pinned = self.system.substitute(pkt.seq, symbols.as_bytes())?;
            self.release_pinned(pinned, now, &mut out)?;
        }
        self.trim();
        Ok(out)
    }

    pub fn on_repair(&mut self, pkt: &RepairPacket, now: SimTime) -> Result<Vec<Release>, CodecError> {
        if pkt.window_start > pkt.window_end {
            return Ok(Vec::new());
        }
        self.note_sent_up_to(pkt.window_end);
        if !self.is_delivered(pkt.window_end) {
            self.missing.insert(pkt.window_end);
        }
        let mut rhs = pkt.payload.clone();
        let mut coeffs = BTreeMap::new();
        for seq in pkt.window_start..=pkt.window_end {
            let c = coefficient(pkt.coeff_seed, seq);
            if self.missing.contains(&seq) {
                coeffs.insert(seq, c);
            } else if let Some(known) = self.retained.get(&seq) {
                rhs.add_scaled(c, known.as_bytes());
            } else {
                // Delivered beyond the retention horizon, or abandoned:
                // this combination cannot be reduced.
                return Ok(Vec::new());
            }
        }
        let mut out = Vec::new();
        if coeffs.is_empty() {
            return Ok(out);
        }
        let pinned = self.system.insert(Row::new(coeffs, rhs))?;
        self.release_pinned(pinned, now, &mut out)?;
        self.trim();
        Ok(out)
    }

    pub fn make_ack(&self) -> AckPacket {
        AckPacket {
            cumulative: self.cumulative,
            extra: self.delivered_above.iter().copied().collect(),
        }
    }

    fn note_sent_up_to(&mut self, seq: u32) {
        let from = self.highest.map_or(0, |h| h + 1);
        if seq + 1 > from {
            self.missing.extend(from..seq);
            self.highest = Some(seq);
        }
    }

    fn mark_delivered(&mut self, seq: u32, symbols: SymbolVector) {
        self.retained.insert(seq, symbols);
        let next = self.cumulative.map_or(0, |c| c + 1);
        if seq == next {
            let mut c = seq;
            while self.delivered_above.remove(&(c + 1)) {
                c += 1;
            }
            self.cumulative = Some(c);
        } else {
            self.delivered_above.insert(seq);
        }
    }

    fn release_pinned(&mut self, pinned: Pinned, now: SimTime, out: &mut Vec<Release>) -> Result<(), CodecError> {
        for (seq, symbols) in pinned {
            let payload = strip_symbols(&symbols).ok_or(CodecError::Corrupt(seq))?;
            self.missing.remove(&seq);
            self.mark_delivered(seq, coded_symbols(&payload));
            out.push(Release {
                seq,
                payload,
                at: now,
                recovered: true,
            });
        }
        Ok(())
    }

    fn trim(&mut self) {
        let Some(highest) = self.highest else { return };
        let horizon = (highest + 1).saturating_sub(self.cfg.max_window as u32);
        if horizon == 0 {
            return;
        }
        self.retained = self.retained.split_off(&horizon);
        while let Some(&old) = self.missing.first() {
            if old >= horizon {
                break;
            }
            self.missing.pop_first();
            self.system.discard_column(old);
            self.abandoned += 1;
        }
    }
}

/// Re-sequences out-of-order releases for in-order consumers.
#[derive(Debug, Clone, Default)]
pub struct InOrderShim {
    next: u32,
    held: BTreeMap<u32, SimTime>,
}

impl InOrderShim {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `(seq, released_at)` for every packet that is now in order.
    /// A held packet is released at the time its predecessor arrives.
    pub fn push(&mut self, seq: u32, at: SimTime) -> Vec<(u32, SimTime)> {
        let mut out = Vec::new();
        if seq < self.next {
            return out;
        }
        self.held.insert(seq, at);
        while let Some(t) = self.held.remove(&self.next) {
            out.push((self.next, t.max(at)));
            self.next += 1;
        }
        out
    }
}
