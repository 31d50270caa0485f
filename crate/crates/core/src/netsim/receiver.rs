//! Receiver endpoint: reliability decoding, acknowledgements and TFRC
//! loss accounting.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::trace::FailureKind;
use crate::baselines::{BlockCode, BlockCodeConfig, BlockDecode};
use crate::gf256::SymbolVector;
use crate::rate::LossHistory;
use crate::scenario::{AckCadence, Reliability};
use crate::sliding::{coded_symbols, strip_symbols, AckPacket, Decoder, DecoderConfig, RepairPacket, SourcePacket};
use crate::time::SimTime;
use crate::wire::WirePacket;

/// A source payload that became available to the application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub seq: u32,
    pub payload: Vec<u8>,
    pub recovered: bool,
}

/// Cumulative-plus-selective acknowledgement state.
#[derive(Debug, Clone, Default)]
pub struct AckTracker {
    cumulative: Option<u32>,
    above: BTreeSet<u32>,
}

impl AckTracker {
    pub fn contains(&self, seq: u32) -> bool {
        self.cumulative.is_some_and(|c| seq <= c) || self.above.contains(&seq)
    }

    /// Returns false if `seq` was already recorded.
    pub fn insert(&mut self, seq: u32) -> bool {
        if self.contains(seq) {
            return false;
        }
        if seq == self.cumulative.map_or(0, |c| c + 1) {
            let mut c = seq;
            while self.above.remove(&(c + 1)) {
                c += 1;
            }
            self.cumulative = Some(c);
        } else {
            self.above.insert(seq);
        }
        true
    }

    pub fn ack(&self) -> AckPacket {
        AckPacket {
            cumulative: self.cumulative,
            extra: self.above.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct BlockRx {
    /// Coded symbols by position in the block.
    have: BTreeMap<usize, SymbolVector>,
    /// Last real seq of the block, learnt from a repair header.
    last_seq: Option<u32>,
    done: bool,
}

#[derive(Debug)]
struct BlockReceiver {
    code: BlockCode,
    cfg: BlockCodeConfig,
    blocks: BTreeMap<u32, BlockRx>,
    delivered: BTreeSet<u32>,
}

impl BlockReceiver {
    fn on_source(&mut self, pkt: &SourcePacket, out: &mut Vec<Delivery>) -> Result<(), String> {
        if !self.delivered.insert(pkt.seq) {
            return Ok(());
        }
        out.push(Delivery {
            seq: pkt.seq,
            payload: pkt.payload.clone(),
            recovered: false,
        });
        let k = self.cfg.k as u32;
        let id = pkt.seq / k;
        let b = self.blocks.entry(id).or_default();
        if !b.done {
            b.have.insert((pkt.seq % k) as usize, coded_symbols(&pkt.payload));
        }
        self.try_decode(id, out)
    }

    fn on_repair(&mut self, pkt: &RepairPacket, out: &mut Vec<Delivery>) -> Result<(), String> {
        let k = self.cfg.k as u32;
        let (_, index) = crate::baselines::block::split_block_seed(pkt.coeff_seed);
        if (index as usize) < self.cfg.k || (index as usize) >= self.cfg.n {
            return Ok(());
        }
        let id = pkt.window_start / k;
        let b = self.blocks.entry(id).or_default();
        if b.done {
            return Ok(());
        }
        b.last_seq = Some(pkt.window_end);
        b.have.insert(index as usize, pkt.payload.clone());
        self.try_decode(id, out)
    }

    fn try_decode(&mut self, id: u32, out: &mut Vec<Delivery>) -> Result<(), String> {
        let k = self.cfg.k;
        let start = id * k as u32;
        let b = self.blocks.get_mut(&id).expect("block entry");
        let Some(last) = b.last_seq else { return Ok(()) };
        let real = (last - start + 1) as usize;
        let missing: Vec<usize> = (0..real).filter(|i| !self.delivered.contains(&(start + *i as u32))).collect();
        if missing.is_empty() {
            b.done = true;
            b.have.clear();
            return Ok(());
        }
        let virtuals = k - real;
        if b.have.len() + virtuals < k {
            return Ok(());
        }
        let len = b.have.values().map(|v| v.len()).max().unwrap_or(0);
        let mut received: Vec<(usize, SymbolVector)> = b
            .have
            .iter()
            .map(|(i, v)| {
                let mut v = v.clone();
                v.resize(len);
                (*i, v)
            })
            .collect();
        received.extend((real..k).map(|i| (i, SymbolVector::zeros(len))));
        received.sort_by_key(|(i, _)| *i);
        match self.code.decode(&received) {
            Ok(BlockDecode::Decoded(sources)) => {
                for i in missing {
                    let seq = start + i as u32;
                    let payload = strip_symbols(&sources[i]).ok_or_else(|| alloc::format!("block decode of seq {seq} is not a valid payload"))?;
                    self.delivered.insert(seq);
                    out.push(Delivery {
                        seq,
                        payload,
                        recovered: true,
                    });
                }
                b.done = true;
                b.have.clear();
                Ok(())
            }
            Ok(BlockDecode::Unrecoverable) => Ok(()),
            Err(e) => Err(alloc::format!("{e}")),
        }
    }
}

#[derive(Debug)]
enum RxCodec {
    None(BTreeSet<u32>),
    Sliding(Decoder, AckCadence),
    Block(BlockReceiver),
    Arq(AckTracker),
}

/// TFRC receiver bookkeeping over transport sequence numbers.
#[derive(Debug, Clone, Default)]
pub struct LossTracker {
    pub history: LossHistory,
    next_tseq: u64,
    last_sent_at: SimTime,
    pub bytes_since_report: usize,
    pub last_report_at: Option<SimTime>,
    first_arrival: Option<SimTime>,
    /// `(sender timestamp, arrival time)` of the newest data packet.
    pub newest: Option<(SimTime, SimTime)>,
}

impl LossTracker {
    /// Returns true when the arrival revealed a new loss event.
    pub fn on_arrival(&mut self, tseq: u64, sent_at: SimTime, wire_len: usize, rtt: SimTime, now: SimTime) -> bool {
        let mut new_event = false;
        if tseq >= self.next_tseq {
            let gap = tseq - self.next_tseq;
            for i in 0..gap {
                // Sender timestamps of lost packets, interpolated.
                let span = sent_at.saturating_sub(self.last_sent_at).as_nanos();
                let est = self.last_sent_at + SimTime::from_nanos(span * (i + 1) / (gap + 1));
                new_event |= self.history.on_lost(est, rtt);
            }
            self.next_tseq = tseq + 1;
            self.last_sent_at = sent_at;
            self.newest = Some((sent_at, now));
        }
        self.history.on_received();
        self.bytes_since_report += wire_len;
        self.first_arrival.get_or_insert(now);
        new_event
    }

    /// Receive rate since the previous report, bytes/s. The first report
    /// measures over `fallback` so a single packet does not read as an
    /// enormous rate.
    pub fn receive_rate(&self, now: SimTime, fallback: SimTime) -> f64 {
        let since = match self.last_report_at {
            Some(t) => now.saturating_sub(t),
            None => now.saturating_sub(self.first_arrival.unwrap_or(now)).max(fallback),
        };
        let secs = since.as_secs_f64();
        if secs <= 0.0 {
            return 0.0;
        }
        self.bytes_since_report as f64 / secs
    }

    /// Echo for a report sent at `now`: the newest packet's timestamp moved
    /// forward by the time the receiver held it.
    pub fn echo(&self, now: SimTime) -> SimTime {
        match self.newest {
            Some((sent, arrived)) => sent + now.saturating_sub(arrived),
            None => SimTime::ZERO,
        }
    }
}

#[derive(Debug, Default)]
pub struct RxOutcome {
    pub deliveries: Vec<Delivery>,
    pub ack: Option<AckPacket>,
    pub error: Option<(FailureKind, String)>,
}

#[derive(Debug)]
pub struct Receiver {
    codec: RxCodec,
    last_ack_at: Option<SimTime>,
}

impl Receiver {
    pub fn new(reliability: &Reliability) -> Self {
        let codec = match reliability {
            Reliability::None => RxCodec::None(BTreeSet::new()),
            Reliability::Sliding(s) => RxCodec::Sliding(
                Decoder::new(DecoderConfig {
                    max_window: s.max_window,
                }),
                s.ack_cadence,
            ),
            Reliability::Block(cfg) => RxCodec::Block(BlockReceiver {
                code: BlockCode::new(*cfg).expect("validated block config"),
                cfg: *cfg,
                blocks: BTreeMap::new(),
                delivered: BTreeSet::new(),
            }),
            Reliability::Arq => RxCodec::Arq(AckTracker::default()),
        };
        Receiver { codec, last_ack_at: None }
    }

    /// Handles one forward packet. `rtt_hint` is the sender's RTT estimate
    /// carried in the packet header.
    pub fn on_packet(&mut self, pkt: &WirePacket, now: SimTime, rtt_hint: Option<SimTime>) -> RxOutcome {
        let mut out = RxOutcome::default();
        let mut wants_ack = false;
        match (&mut self.codec, pkt) {
            (RxCodec::None(seen), WirePacket::Source(p)) => {
                if seen.insert(p.seq) {
                    out.deliveries.push(Delivery {
                        seq: p.seq,
                        payload: p.payload.clone(),
                        recovered: false,
                    });
                }
            }
            (RxCodec::Sliding(dec, cadence), WirePacket::Source(_) | WirePacket::Repair(_)) => {
                let res = match pkt {
                    WirePacket::Source(p) => dec.on_source(p, now),
                    WirePacket::Repair(r) => dec.on_repair(r, now),
                    _ => unreachable!(),
                };
                match res {
                    Ok(rel) => out.deliveries.extend(rel.into_iter().map(|r| Delivery {
                        seq: r.seq,
                        payload: r.payload,
                        recovered: r.recovered,
                    })),
                    Err(e) => out.error = Some((FailureKind::Corrupt, alloc::format!("{e}"))),
                }
                wants_ack = match (*cadence, rtt_hint, self.last_ack_at) {
                    (AckCadence::PerRtt, Some(rtt), Some(last)) => now >= last + rtt,
                    _ => true,
                };
                if wants_ack {
                    out.ack = Some(dec.make_ack());
                }
            }
            (RxCodec::Block(b), WirePacket::Source(p)) => {
                if let Err(e) = b.on_source(p, &mut out.deliveries) {
                    out.error = Some((FailureKind::Corrupt, e));
                }
            }
            (RxCodec::Block(b), WirePacket::Repair(r)) => {
                if let Err(e) = b.on_repair(r, &mut out.deliveries) {
                    out.error = Some((FailureKind::Corrupt, e));
                }
            }
            (RxCodec::Arq(t), WirePacket::Source(p)) => {
                if t.insert(p.seq) {
                    out.deliveries.push(Delivery {
                        seq: p.seq,
                        payload: p.payload.clone(),
                        // Whether this copy is a retransmission is decided
                        // by the caller from the packet class.
                        recovered: false,
                    });
                }
                wants_ack = true;
                out.ack = Some(t.ack());
            }
            _ => {}
        }
        if wants_ack {
            self.last_ack_at = Some(now);
        }
        out
    }
}
