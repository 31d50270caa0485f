//! Per-run summary statistics computed from a simulation trace.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::netsim::{FailureKind, PacketClass, SimulationTrace, Stage, TraceKind};
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("trace contains no source transmissions")]
    Empty,
    #[error("trace was truncated by {0:?}; pass allow_partial to summarize it anyway")]
    Truncated(FailureKind),
}

/// Nearest-rank quantiles, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantiles {
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
    pub max: f64,
}

/// Element of rank `ceil(q * n)` (1-based) of an ascending slice.
pub fn nearest_rank(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let n = sorted.len();
    let rank = (libm::ceil(q * n as f64) as usize).clamp(1, n);
    Some(sorted[rank - 1])
}

impl Quantiles {
    pub fn from_unsorted(mut values: Vec<f64>) -> Option<Self> {
        values.sort_by(f64::total_cmp);
        Some(Quantiles {
            p50: nearest_rank(&values, 0.50)?,
            p95: nearest_rank(&values, 0.95)?,
            p99: nearest_rank(&values, 0.99)?,
            max: *values.last()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub eventual_delivery_ratio: f64,
    /// Delivered with latency (availability minus creation) within the
    /// deadline.
    pub deadline_delivery_ratio: f64,
    /// Over recovered packets only; `None` when nothing needed recovery.
    pub recovery_delay: Option<Quantiles>,
    /// Delivered source payload bits over the traffic duration.
    pub mean_goodput: f64,
    pub max_sender_queue_delay: f64,
    /// Repairs and retransmissions as a fraction of all data packets sent.
    pub repair_overhead_measured: f64,
    pub sources_sent: usize,
    pub sources_delivered: usize,
    pub sources_recovered: usize,
}

pub fn compute_metrics(trace: &SimulationTrace, deadline: f64, allow_partial: bool) -> Result<MetricsRecord, MetricsError> {
    if let (Some(f), false) = (&trace.failure, allow_partial) {
        return Err(MetricsError::Truncated(f.kind));
    }
    let deadline = SimTime::from_secs_f64(deadline);
    let mut created: BTreeMap<u64, SimTime> = BTreeMap::new();
    let mut available: BTreeMap<u64, (SimTime, usize)> = BTreeMap::new();
    let mut recovery = Vec::new();
    let (mut src, mut extra) = (0usize, 0usize);
    let mut max_queue = SimTime::ZERO;
    for r in &trace.records {
        match r.kind {
            TraceKind::Packet(PacketClass::Source, Stage::Tx) => {
                src += 1;
                let q = r.queue_delay.unwrap_or(SimTime::ZERO);
                max_queue = max_queue.max(q);
                if let Some(seq) = r.seq {
                    created.entry(seq).or_insert(r.at.saturating_sub(q));
                }
            }
            TraceKind::Packet(PacketClass::Repair | PacketClass::Retransmit, Stage::Tx) => extra += 1,
            TraceKind::Deliver | TraceKind::Recover => {
                let Some(seq) = r.seq else { continue };
                if available.contains_key(&seq) {
                    continue;
                }
                available.insert(seq, (r.at, r.size));
                if r.kind == TraceKind::Recover {
                    recovery.push(r.decoded_delay.unwrap_or(SimTime::ZERO).as_secs_f64());
                }
            }
            _ => {}
        }
    }
    if created.is_empty() {
        return Err(MetricsError::Empty);
    }
    let sent = created.len();
    let mut delivered = 0;
    let mut on_time = 0;
    let mut bytes = 0usize;
    for (seq, (at, size)) in &available {
        let Some(c) = created.get(seq) else { continue };
        delivered += 1;
        bytes += size;
        if at.saturating_sub(*c) <= deadline {
            on_time += 1;
        }
    }
    let sources_recovered = recovery.len();
    Ok(MetricsRecord {
        eventual_delivery_ratio: delivered as f64 / sent as f64,
        deadline_delivery_ratio: on_time as f64 / sent as f64,
        recovery_delay: Quantiles::from_unsorted(recovery),
        mean_goodput: if trace.duration > 0.0 {
            bytes as f64 * 8.0 / trace.duration
        } else {
            0.0
        },
        max_sender_queue_delay: max_queue.as_secs_f64(),
        repair_overhead_measured: if src + extra > 0 {
            extra as f64 / (src + extra) as f64
        } else {
            0.0
        },
        sources_sent: sent,
        sources_delivered: delivered,
        sources_recovered,
    })
}
