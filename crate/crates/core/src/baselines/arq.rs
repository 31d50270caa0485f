//! Sender half of NACK-driven selective repeat.
//!
//! The receiver reports its gaps in every acknowledgement. A gap triggers a
//! retransmission at most once per suppression window (one RTT), so a lost
//! packet always costs at least one extra round trip.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::sliding::{AckPacket, SourcePacket};
use crate::time::SimTime;

#[derive(Debug, Clone)]
struct Buffered {
    payload: Vec<u8>,
    last_tx: SimTime,
    transmissions: u32,
}

#[derive(Debug, Clone)]
pub struct ArqState {
    send_buffer: BTreeMap<u32, Buffered>,
    /// Minimum spacing between transmissions of the same seq.
    retransmit_timer: SimTime,
    /// Gaps reported by the most recent feedback.
    receiver_nacks: BTreeSet<u32>,
    capacity: usize,
    unrecoverable: BTreeSet<u32>,
    retransmissions: u64,
}

impl ArqState {
    pub fn new(retransmit_timer: SimTime, capacity: usize) -> Self {
        ArqState {
            send_buffer: BTreeMap::new(),
            retransmit_timer,
            receiver_nacks: BTreeSet::new(),
            capacity,
            unrecoverable: BTreeSet::new(),
            retransmissions: 0,
        }
    }

    pub fn retransmit_timer(&self) -> SimTime {
        self.retransmit_timer
    }

    pub fn set_retransmit_timer(&mut self, t: SimTime) {
        self.retransmit_timer = t;
    }

    pub fn buffered(&self) -> usize {
        self.send_buffer.len()
    }

    pub fn receiver_nacks(&self) -> &BTreeSet<u32> {
        &self.receiver_nacks
    }

    /// Seqs nacked after they had already left the buffer.
    pub fn unrecoverable(&self) -> &BTreeSet<u32> {
        &self.unrecoverable
    }

    pub fn retransmissions(&self) -> u64 {
        self.retransmissions
    }

    /// Records a first transmission. The oldest entry is evicted when the
    /// buffer is full.
    pub fn on_send(&mut self, pkt: &SourcePacket, now: SimTime) {
        if self.send_buffer.len() >= self.capacity {
            self.send_buffer.pop_first();
        }
        self.send_buffer.insert(
            pkt.seq,
            Buffered {
                payload: pkt.payload.clone(),
                last_tx: now,
                transmissions: 1,
            },
        );
    }

    /// Releases acknowledged packets and returns the gaps the ack reports.
    pub fn on_ack(&mut self, ack: &AckPacket) -> Vec<u32> {
        if let Some(c) = ack.cumulative {
            self.send_buffer = self.send_buffer.split_off(&(c + 1));
        }
        for s in &ack.extra {
            self.send_buffer.remove(s);
        }
        ack.gaps()
    }

    /// Packets to retransmit for the reported gaps. A seq already sent
    /// within the last `retransmit_timer` is suppressed.
    pub fn on_feedback(&mut self, nack_seqs: &[u32], now: SimTime) -> Vec<SourcePacket> {
        self.receiver_nacks = nack_seqs.iter().copied().collect();
        let mut out = Vec::new();
        for &seq in nack_seqs {
            match self.send_buffer.get_mut(&seq) {
                Some(b) if now >= b.last_tx + self.retransmit_timer => {
                    b.last_tx = now;
                    b.transmissions += 1;
                    self.retransmissions += 1;
                    out.push(SourcePacket {
                        seq,
                        payload: b.payload.clone(),
                    });
                }
                Some(_) => {}
                None => {
                    self.unrecoverable.insert(seq);
                }
            }
        }
        out
    }

    /// Timer path for losses no later arrival reveals (the tail of a
    /// stream): everything unacknowledged for longer than `rto`.
    pub fn on_timer(&mut self, now: SimTime, rto: SimTime) -> Vec<SourcePacket> {
        let mut out = Vec::new();
        for (&seq, b) in self.send_buffer.iter_mut() {
            if now >= b.last_tx + rto {
                b.last_tx = now;
                b.transmissions += 1;
                self.retransmissions += 1;
                out.push(SourcePacket {
                    seq,
                    payload: b.payload.clone(),
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn state() -> ArqState {
        let mut s = ArqState::new(SimTime::from_millis(100), 1024);
        for seq in 0..10 {
            s.on_send(
                &SourcePacket {
                    seq,
                    payload: vec![seq as u8],
                },
                SimTime::ZERO,
            );
        }
        s
    }

    #[test]
    fn empty_nack_set() {
        assert!(state().on_feedback(&[], SimTime::from_millis(200)).is_empty());
    }

    #[test]
    fn nack_retransmits_buffered_packet() {
        let mut s = state();
        let out = s.on_feedback(&[5], SimTime::from_millis(200));
        assert_eq!(out, vec![SourcePacket { seq: 5, payload: vec![5] }]);
    }

    #[test]
    fn duplicate_nack_within_rtt_is_suppressed() {
        let mut s = state();
        assert_eq!(s.on_feedback(&[5], SimTime::from_millis(200)).len(), 1);
        assert!(s.on_feedback(&[5], SimTime::from_millis(250)).is_empty());
        assert_eq!(s.on_feedback(&[5], SimTime::from_millis(300)).len(), 1);
    }

    #[test]
    fn nack_for_unbuffered_seq_is_unrecoverable() {
        let mut s = state();
        s.on_ack(&AckPacket {
            cumulative: Some(3),
            extra: vec![],
        });
        assert!(s.on_feedback(&[2, 42], SimTime::from_millis(200)).is_empty());
        assert_eq!(s.unrecoverable().iter().copied().collect::<Vec<_>>(), vec![2, 42]);
    }

    #[test]
    fn ack_releases_and_reports_gaps() {
        let mut s = state();
        let gaps = s.on_ack(&AckPacket {
            cumulative: Some(2),
            extra: vec![4, 6],
        });
        assert_eq!(gaps, vec![3, 5]);
        assert_eq!(s.buffered(), 10 - 5);
    }

    #[test]
    fn timer_retransmits_stale_packets() {
        let mut s = state();
        s.on_ack(&AckPacket {
            cumulative: Some(8),
            extra: vec![],
        });
        let out = s.on_timer(SimTime::from_millis(500), SimTime::from_millis(400));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].seq, 9);
        assert!(s.on_timer(SimTime::from_millis(600), SimTime::from_millis(400)).is_empty());
    }
}
