use alloc::string::String;
use alloc::vec::Vec;

use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Sender to receiver.
    Forward,
    /// Receiver to sender.
    Reverse,
    /// Receiver application (delivery and decoding events).
    App,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "fwd",
            Direction::Reverse => "rev",
            Direction::App => "app",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "fwd" => Direction::Forward,
            "rev" => Direction::Reverse,
            "app" => Direction::App,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureKind {
    WindowOverflow,
    QueueOverflow,
    Corrupt,
}

impl FailureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureKind::WindowOverflow => "fail_window_overflow",
            FailureKind::QueueOverflow => "fail_queue_overflow",
            FailureKind::Corrupt => "fail_corrupt",
        }
    }
}

/// What a packet slot carried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketClass {
    Source,
    Repair,
    Retransmit,
    Padding,
    Ack,
    Feedback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Tx,
    Rx,
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceKind {
    Packet(PacketClass, Stage),
    /// Source packet handed to the application as received.
    Deliver,
    /// Source packet rebuilt by the decoder or a retransmission.
    Recover,
    Failure(FailureKind),
}

const CLASS_NAMES: [(PacketClass, &str); 6] = [
    (PacketClass::Source, "src"),
    (PacketClass::Repair, "rep"),
    (PacketClass::Retransmit, "retx"),
    (PacketClass::Padding, "pad"),
    (PacketClass::Ack, "ack"),
    (PacketClass::Feedback, "fb"),
];

const STAGE_NAMES: [(Stage, &str); 3] = [(Stage::Tx, "tx"), (Stage::Rx, "rx"), (Stage::Drop, "drop")];

const FAILURES: [FailureKind; 3] = [FailureKind::WindowOverflow, FailureKind::QueueOverflow, FailureKind::Corrupt];

impl TraceKind {
    pub fn name(self) -> String {
        match self {
            TraceKind::Packet(c, s) => {
                let c = CLASS_NAMES.iter().find(|(k, _)| *k == c).map(|(_, n)| *n).unwrap_or("?");
                let s = STAGE_NAMES.iter().find(|(k, _)| *k == s).map(|(_, n)| *n).unwrap_or("?");
                alloc::format!("{c}_{s}")
            }
            TraceKind::Deliver => "deliver".into(),
            TraceKind::Recover => "recover".into(),
            TraceKind::Failure(f) => f.as_str().into(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "deliver" => return Some(TraceKind::Deliver),
            "recover" => return Some(TraceKind::Recover),
            _ => {}
        }
        if let Some(f) = FAILURES.iter().find(|f| f.as_str() == s) {
            return Some(TraceKind::Failure(*f));
        }
        let (c, st) = s.split_once('_')?;
        let class = CLASS_NAMES.iter().find(|(_, n)| *n == c)?.0;
        let stage = STAGE_NAMES.iter().find(|(_, n)| *n == st)?.0;
        Some(TraceKind::Packet(class, stage))
    }
}

/// One row of the per-packet trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub at: SimTime,
    pub direction: Direction,
    pub kind: TraceKind,
    /// Source seq for source/retransmission/delivery rows, repair seq for
    /// repairs, transmission index for padding, cumulative seq for acks.
    pub seq: Option<u64>,
    /// Bytes on the wire, or payload bytes for app rows.
    pub size: usize,
    /// Sender queueing delay, on source transmissions.
    pub queue_delay: Option<SimTime>,
    /// Zero on deliveries; the recovery delay on recoveries.
    pub decoded_delay: Option<SimTime>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub at: SimTime,
    pub kind: FailureKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub records: Vec<TraceRecord>,
    /// `<reliability>-<coupling>`, the trace file's mode column.
    pub mode: String,
    /// Traffic duration, seconds.
    pub duration: f64,
    pub one_way_delay: SimTime,
    /// Set when the run was cut short; the last record then describes it.
    pub failure: Option<Failure>,
}

impl SimulationTrace {
    pub fn is_truncated(&self) -> bool {
        self.failure.is_some()
    }

    pub fn count(&self, kind: TraceKind) -> usize {
        self.records.iter().filter(|r| r.kind == kind).count()
    }
}
