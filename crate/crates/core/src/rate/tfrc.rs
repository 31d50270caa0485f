use alloc::collections::VecDeque;

use crate::time::SimTime;

/// Weights for the eight most recent loss intervals, newest first.
pub const INTERVAL_WEIGHTS: [f64; 8] = [1.0, 1.0, 1.0, 1.0, 0.8, 0.6, 0.4, 0.2];

/// Rate before the first RTT sample, bytes/s.
pub const INITIAL_RATE: f64 = 1000.0;

/// Loss event rate `p` from loss interval lengths (packets, newest first).
/// Only the first eight intervals count; an empty history means no loss.
pub fn loss_event_rate(intervals: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (i, w) in intervals.iter().zip(INTERVAL_WEIGHTS) {
        num += w * i;
        den += w;
    }
    if den == 0.0 || num <= 0.0 {
        return 0.0;
    }
    den / num
}

/// TCP throughput equation in bytes/s:
///
/// `X = s / (R*sqrt(2bp/3) + t_RTO * 3*sqrt(3bp/8) * p * (1 + 32p^2))`, `b = 1`.
///
/// Returns infinity for `p == 0`; callers cap the result with the receive
/// rate.
pub fn tfrc_rate(p: f64, srtt: f64, s: f64, rto: f64) -> f64 {
    if p <= 0.0 {
        return f64::INFINITY;
    }
    let b = 1.0;
    let denom = srtt * libm::sqrt(2.0 * b * p / 3.0)
        + rto * (3.0 * libm::sqrt(3.0 * b * p / 8.0)) * p * (1.0 + 32.0 * p * p);
    s / denom
}

/// Receiver report in wire units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FeedbackReport {
    /// Receive rate in micro-bytes per second.
    pub recv_rate_micro: u64,
    /// Loss event rate in units of 1e-9.
    pub p_nano: u64,
    /// Sender timestamp (microseconds) of the newest data packet, echoed
    /// back; the sender derives its RTT sample from it.
    pub echo_us: u32,
}

impl FeedbackReport {
    pub fn new(recv_rate: f64, p: f64, echo: SimTime) -> Self {
        FeedbackReport {
            recv_rate_micro: libm::round(recv_rate.max(0.0) * 1e6) as u64,
            p_nano: libm::round(p.clamp(0.0, 1.0) * 1e9) as u64,
            echo_us: (echo.as_nanos() / 1_000) as u32,
        }
    }

    pub fn recv_rate(&self) -> f64 {
        self.recv_rate_micro as f64 / 1e6
    }

    pub fn loss_event_rate(&self) -> f64 {
        self.p_nano as f64 / 1e9
    }

    pub fn echo(&self) -> SimTime {
        SimTime::from_micros(self.echo_us as u64)
    }
}

/// What the sender feeds into [`RateState::on_feedback`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub recv_rate: f64,
    pub loss_event_rate: f64,
    pub rtt_sample: f64,
}

/// Sender-side TFRC state.
#[derive(Debug, Clone, PartialEq)]
pub struct RateState {
    pub srtt: Option<f64>,
    pub rto: f64,
    pub segment_size: f64,
    /// Allowed sending rate, bytes/s.
    pub allowed_rate: f64,
    pub recv_rate: f64,
    pub loss_event_rate: f64,
}

impl RateState {
    pub fn new(segment_size: f64) -> Self {
        RateState {
            srtt: None,
            rto: 0.0,
            segment_size,
            allowed_rate: INITIAL_RATE,
            recv_rate: 0.0,
            loss_event_rate: 0.0,
        }
    }

    pub fn on_feedback(&mut self, fb: RateSample) {
        if fb.rtt_sample > 0.0 {
            self.srtt = Some(match self.srtt {
                None => fb.rtt_sample,
                Some(r) => 0.9 * r + 0.1 * fb.rtt_sample,
            });
        }
        let Some(srtt) = self.srtt else { return };
        self.rto = 4.0 * srtt;
        self.recv_rate = fb.recv_rate;
        self.loss_event_rate = fb.loss_event_rate;
        let s = self.segment_size;
        let cap = 2.0 * fb.recv_rate;
        self.allowed_rate = if fb.loss_event_rate > 0.0 {
            tfrc_rate(fb.loss_event_rate, srtt, s, self.rto).min(cap).max(s / 64.0)
        } else {
            // Slow start: double per feedback, bounded by the receive rate,
            // but never below one segment per RTT.
            (2.0 * self.allowed_rate).min(cap).max(s / srtt)
        };
    }
}

/// Receiver-side loss interval history.
///
/// A loss opens a new loss event unless it falls within one RTT (sender
/// timestamps) of the current event's first loss. The interval preceding
/// the first event counts the packets seen before it.
#[derive(Debug, Clone, Default)]
pub struct LossHistory {
    closed: VecDeque<f64>,
    /// Packets since the start of the current event (or of the stream).
    open: u64,
    event_start: Option<SimTime>,
}

impl LossHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn on_received(&mut self) {
        self.open += 1;
    }

    /// Returns true if this loss opened a new loss event.
    pub fn on_lost(&mut self, sent_at: SimTime, rtt: SimTime) -> bool {
        let new_event = match self.event_start {
            None => true,
            Some(start) => sent_at > start + rtt,
        };
        if new_event {
            self.closed.push_front(self.open.max(1) as f64);
            self.closed.truncate(INTERVAL_WEIGHTS.len());
            self.open = 1;
            self.event_start = Some(sent_at);
        } else {
            self.open += 1;
        }
        new_event
    }

    pub fn intervals(&self) -> impl Iterator<Item = f64> + '_ {
        self.closed.iter().copied()
    }

    /// `1 / max(mean without the open interval, mean with it)`.
    pub fn loss_event_rate(&self) -> f64 {
        if self.closed.is_empty() {
            return 0.0;
        }
        let closed: alloc::vec::Vec<f64> = self.closed.iter().copied().collect();
        let mut with_open = alloc::vec::Vec::with_capacity(8);
        with_open.push(self.open as f64);
        with_open.extend(closed.iter().take(7));
        let a = loss_event_rate(&closed);
        let b = loss_event_rate(&with_open);
        if a == 0.0 || b == 0.0 {
            return a.max(b);
        }
        a.min(b)
    }
}
