use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use super::channel::{Channel, ChannelOutcome};
use super::event::EventQueue;
use super::receiver::{LossTracker, Receiver};
use super::sender::{CodecHooks, Fragment, Gate, QueueConfig, SenderQueue};
use super::trace::{Direction, Failure, FailureKind, PacketClass, SimulationTrace, Stage, TraceKind, TraceRecord};
use crate::baselines::block::block_seed;
use crate::baselines::{ArqState, BlockCode};
use crate::gf256::SymbolVector;
use crate::rate::{FeedbackReport, RateSample, RateState, VpRateState};
use crate::scenario::{CouplingMode, RateMode, Reliability, ScenarioConfig, TrafficConfig};
use crate::sliding::{coded_symbols, AckPacket, Encoder, EncoderConfig, RepairPacket, SourcePacket};
use crate::time::SimTime;
use crate::traffic::{cbr_frames, frames_from_trace, generate_frames, FrameEvent};
use crate::wire::{WirePacket, REPAIR_HEADER, SOURCE_HEADER};

/// Deterministic payload contents of source `seq`, so every delivery can be
/// checked byte for byte.
pub fn payload_bytes(seq: u32, len: usize) -> Vec<u8> {
    let mut x = (seq as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        x ^= x >> 29;
        x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x ^= x >> 32;
        for b in x.to_le_bytes() {
            if out.len() == len {
                break;
            }
            out.push(b);
        }
    }
    out
}

/// Forward datagram as it travels the channel.
#[derive(Debug, Clone)]
struct Datagram {
    tseq: u64,
    sent_at: SimTime,
    rtt_hint: Option<SimTime>,
    class: PacketClass,
    packet: WirePacket,
    wire_len: usize,
}

#[derive(Debug, Clone)]
struct ReverseDatagram {
    class: PacketClass,
    packet: WirePacket,
    wire_len: usize,
    echo: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Timer {
    Feedback,
    Flush,
    Retransmit,
}

#[derive(Debug, Clone)]
enum Ev {
    FrameDue(usize),
    PacketArrival(Datagram),
    AckArrival(ReverseDatagram),
    FeedbackTimer(Timer),
    SendSlot,
}

struct BlockTx {
    code: BlockCode,
    k: usize,
    start: u32,
    current: Vec<SymbolVector>,
    pending: VecDeque<RepairPacket>,
    repair_seq: u32,
}

impl BlockTx {
    fn finish_block(&mut self) {
        if self.current.is_empty() {
            return;
        }
        let real = self.current.len();
        let len = self.current.iter().map(|v| v.len()).max().unwrap_or(0);
        let mut block: Vec<SymbolVector> = self
            .current
            .drain(..)
            .map(|mut v| {
                v.resize(len);
                v
            })
            .collect();
        block.resize(self.k, SymbolVector::zeros(len));
        let parity = self.code.encode(&block).expect("block shape");
        let id = self.start / self.k as u32;
        for (j, payload) in parity.into_iter().enumerate() {
            self.pending.push_back(RepairPacket {
                repair_seq: self.repair_seq,
                window_start: self.start,
                window_end: self.start + real as u32 - 1,
                coeff_seed: block_seed(id as u16, (self.k + j) as u16),
                payload,
            });
            self.repair_seq += 1;
        }
        self.start += real as u32;
    }
}

enum TxCodec {
    None,
    Sliding { enc: Encoder, flush_pending: u32 },
    Block(BlockTx),
    Arq { state: ArqState, pending: VecDeque<SourcePacket> },
}

struct Hooks {
    codec: TxCodec,
    next_seq: u32,
}

impl CodecHooks for Hooks {
    fn extra_ready(&self) -> Option<usize> {
        match &self.codec {
            TxCodec::None => None,
            TxCodec::Sliding { enc, flush_pending } => {
                (enc.next_is_repair() || *flush_pending > 0).then(|| REPAIR_HEADER + enc.repair_len())
            }
            TxCodec::Block(b) => b.pending.front().map(|r| REPAIR_HEADER + r.payload.len()),
            TxCodec::Arq { pending, .. } => pending.front().map(|p| SOURCE_HEADER + p.payload.len()),
        }
    }

    fn take_extra(&mut self, _now: SimTime) -> Option<(PacketClass, WirePacket)> {
        match &mut self.codec {
            TxCodec::None => None,
            TxCodec::Sliding { enc, flush_pending } => {
                if !enc.next_is_repair() {
                    *flush_pending = flush_pending.saturating_sub(1);
                }
                enc.emit_repair().map(|r| (PacketClass::Repair, WirePacket::Repair(r)))
            }
            TxCodec::Block(b) => b.pending.pop_front().map(|r| (PacketClass::Repair, WirePacket::Repair(r))),
            TxCodec::Arq { pending, .. } => pending.pop_front().map(|p| (PacketClass::Retransmit, WirePacket::Source(p))),
        }
    }

    fn wrap_source(&mut self, size: usize, now: SimTime) -> Result<WirePacket, (FailureKind, String)> {
        let seq = self.next_seq;
        let payload = payload_bytes(seq, size);
        let pkt = match &mut self.codec {
            TxCodec::Sliding { enc, .. } => enc.push_source(&payload).map_err(|e| {
                let kind = match e {
                    crate::sliding::CodecError::WindowOverflow { .. } => FailureKind::WindowOverflow,
                    _ => FailureKind::Corrupt,
                };
                (kind, alloc::format!("{e}"))
            })?,
            TxCodec::Block(b) => {
                b.current.push(coded_symbols(&payload));
                if b.current.len() == b.k {
                    b.finish_block();
                }
                SourcePacket { seq, payload }
            }
            TxCodec::Arq { state, .. } => {
                let p = SourcePacket { seq, payload };
                state.on_send(&p, now);
                p
            }
            TxCodec::None => SourcePacket { seq, payload },
        };
        self.next_seq += 1;
        Ok(WirePacket::Source(pkt))
    }
}

enum RateCtl {
    None,
    Fixed(f64),
    Tfrc(RateState),
}

impl RateCtl {
    fn allowed(&self) -> Option<f64> {
        match self {
            RateCtl::None => None,
            RateCtl::Fixed(x) => Some(*x),
            RateCtl::Tfrc(s) => Some(s.allowed_rate),
        }
    }
}

struct FlushState {
    started: bool,
    until: SimTime,
    interval: SimTime,
}

struct Sim<'a> {
    sc: &'a ScenarioConfig,
    q: EventQueue<Ev>,
    now: SimTime,
    end: SimTime,
    active_until: SimTime,
    fwd: Channel,
    rev: Channel,
    records: Vec<TraceRecord>,
    failure: Option<Failure>,
    frames: Vec<FrameEvent>,
    frames_done: usize,
    queue: SenderQueue,
    hooks: Hooks,
    rate: RateCtl,
    vp: Option<VpRateState>,
    vp_slot: u64,
    wake_at: Option<SimTime>,
    tseq: u64,
    srtt: Option<SimTime>,
    first_tx: BTreeMap<u32, SimTime>,
    src_first: Option<SimTime>,
    src_last: SimTime,
    src_count: u64,
    rx: Receiver,
    loss: Option<LossTracker>,
    feedback_timer_armed: bool,
    /// Latest sender RTT estimate seen in a forward header.
    rx_rtt_hint: Option<SimTime>,
    flush: FlushState,
    arq_timer_armed: bool,
}

const DEFAULT_RTT: SimTime = SimTime::from_millis(100);

/// Runs one scenario to completion (or to its first failure).
///
/// The scenario should have passed [`ScenarioConfig::validate`]; invalid
/// traffic parameters yield an empty trace.
pub fn run(sc: &ScenarioConfig) -> SimulationTrace {
    let frames = match &sc.traffic {
        TrafficConfig::Vbr { .. } => generate_frames(&sc.traffic.vbr(sc.duration).expect("vbr")).unwrap_or_default(),
        TrafficConfig::Cbr { bitrate, packet_size } => cbr_frames(*bitrate, *packet_size, sc.duration),
        TrafficConfig::Greedy { .. } => Vec::new(),
        TrafficConfig::Trace {
            frames,
            frame_rate,
            max_payload,
        } => frames_from_trace(frames, *frame_rate, *max_payload).unwrap_or_default(),
    };
    let active_until = SimTime::from_secs_f64(sc.duration);
    let frames: Vec<FrameEvent> = frames.into_iter().filter(|f| f.due_at < active_until).collect();
    let seed_base = (sc.coefficient_seed ^ (sc.coefficient_seed >> 32)) as u32;
    let codec = match &sc.reliability {
        Reliability::None => TxCodec::None,
        Reliability::Sliding(s) => TxCodec::Sliding {
            enc: Encoder::new(EncoderConfig {
                redundancy_ratio: s.rho,
                max_window: s.max_window,
                max_payload: crate::wire::MAX_PAYLOAD,
                seed_base,
            })
            .expect("validated ratio"),
            flush_pending: 0,
        },
        Reliability::Block(cfg) => TxCodec::Block(BlockTx {
            code: BlockCode::new(*cfg).expect("validated block config"),
            k: cfg.k,
            start: 0,
            current: Vec::new(),
            pending: VecDeque::new(),
            repair_seq: 0,
        }),
        Reliability::Arq => TxCodec::Arq {
            state: ArqState::new(SimTime::from_secs_f64(1.0), 1 << 20),
            pending: VecDeque::new(),
        },
    };
    let rate = match sc.rate.mode {
        RateMode::None => RateCtl::None,
        RateMode::Fixed => RateCtl::Fixed(sc.rate.fixed_rate),
        RateMode::Tfrc => RateCtl::Tfrc(RateState::new(sc.rate.segment_size as f64)),
    };
    let vp = (sc.coupling == CouplingMode::Vp && sc.rate.mode != RateMode::None).then(|| {
        let mut v = VpRateState::new(
            sc.rate.vp_packet_rate,
            sc.transport_overhead + SOURCE_HEADER,
            sc.rate.vp_min_payload,
        );
        if let Some(x) = rate.allowed() {
            v.update(x);
        }
        v
    });
    let greedy = match sc.traffic {
        TrafficConfig::Greedy { payload } => Some(payload),
        _ => None,
    };
    let queue = SenderQueue::new(QueueConfig {
        transport_overhead: sc.transport_overhead,
        segment_size: sc.rate.segment_size,
        count_small_as_full: sc.rate.count_small_as_full,
        bucket_depth: sc.rate.bucket_depth.max(1),
        padding: sc.rate.padding,
        max_queue: sc.rate.max_queue,
        greedy,
        active_until,
    });
    let mut sim = Sim {
        sc,
        q: EventQueue::new(),
        now: SimTime::ZERO,
        end: active_until + SimTime::from_secs_f64(sc.drain),
        active_until,
        fwd: Channel::new(&sc.channel_forward),
        rev: Channel::new(&sc.channel_reverse),
        records: Vec::new(),
        failure: None,
        frames,
        frames_done: 0,
        queue,
        hooks: Hooks { codec, next_seq: 0 },
        rate,
        vp,
        vp_slot: 0,
        wake_at: None,
        tseq: 0,
        srtt: None,
        first_tx: BTreeMap::new(),
        src_first: None,
        src_last: SimTime::ZERO,
        src_count: 0,
        rx: Receiver::new(&sc.reliability),
        loss: (sc.rate.mode == RateMode::Tfrc).then(LossTracker::default),
        feedback_timer_armed: false,
        rx_rtt_hint: None,
        flush: FlushState {
            started: false,
            until: SimTime::ZERO,
            interval: SimTime::ZERO,
        },
        arq_timer_armed: false,
    };
    sim.run();
    SimulationTrace {
        records: sim.records,
        mode: sc.mode_label(),
        duration: sc.duration,
        one_way_delay: sim.fwd.delay(),
        failure: sim.failure,
    }
}

impl Sim<'_> {
    fn run(&mut self) {
        for (i, f) in self.frames.iter().enumerate() {
            self.q.push(f.due_at, Ev::FrameDue(i));
        }
        if self.vp.is_some() || matches!(self.sc.traffic, TrafficConfig::Greedy { .. }) || self.queue.padding_mode {
            self.q.push(SimTime::ZERO, Ev::SendSlot);
        }
        while let Some(ev) = self.q.pop() {
            if ev.at > self.end || self.failure.is_some() {
                break;
            }
            self.now = ev.at;
            match ev.kind {
                Ev::FrameDue(i) => self.on_frame(i),
                Ev::PacketArrival(dg) => self.on_forward_arrival(dg),
                Ev::AckArrival(dg) => self.on_reverse_arrival(dg),
                Ev::FeedbackTimer(t) => self.on_timer(t),
                Ev::SendSlot => self.on_send_slot(),
            }
        }
    }

    fn traffic_done(&self) -> bool {
        match self.sc.traffic {
            TrafficConfig::Greedy { .. } => self.now >= self.active_until,
            _ => self.frames_done == self.frames.len(),
        }
    }

    fn fail(&mut self, kind: FailureKind, detail: String) {
        if self.failure.is_some() {
            return;
        }
        self.records.push(TraceRecord {
            at: self.now,
            direction: Direction::App,
            kind: TraceKind::Failure(kind),
            seq: None,
            size: 0,
            queue_delay: None,
            decoded_delay: None,
        });
        self.failure = Some(Failure {
            at: self.now,
            kind,
            detail,
        });
    }

    fn on_frame(&mut self, i: usize) {
        let packets = core::mem::take(&mut self.frames[i].packets);
        for size in packets {
            if let Err((kind, detail)) = self.queue.enqueue(Fragment {
                created_at: self.now,
                size,
            }) {
                self.fail(kind, detail);
                return;
            }
        }
        self.frames_done += 1;
        self.pump();
    }

    fn gate(&self) -> Option<Gate> {
        match (self.rate.allowed(), self.sc.coupling) {
            (None, _) => Some(Gate::Unlimited),
            (Some(_), CouplingMode::Vp) => None,
            (Some(rate), c) => Some(Gate::Tokens {
                rate,
                outside: c == CouplingMode::Outside,
            }),
        }
    }

    /// Sends what the gate allows now; arranges a wake-up otherwise.
    fn pump(&mut self) {
        if self.failure.is_some() {
            return;
        }
        let Some(gate) = self.gate() else {
            self.maybe_start_flush();
            return;
        };
        let res = self.queue.tick(self.now, gate, &mut self.hooks);
        for out in res.sent {
            self.transmit(out.class, out.packet, out.wire_len, out.created_at);
        }
        if let Some((kind, detail)) = res.failure {
            self.fail(kind, detail);
            return;
        }
        if let Some(t) = res.wake_at {
            if self.wake_at.is_none_or(|w| t < w || w <= self.now) {
                self.wake_at = Some(t);
                self.q.push(t, Ev::SendSlot);
            }
        }
        self.maybe_start_flush();
    }

    fn on_send_slot(&mut self) {
        let Some(vp) = self.vp else {
            if self.wake_at.is_some_and(|w| w <= self.now) {
                self.wake_at = None;
            }
            self.pump();
            return;
        };
        let res = self.queue.tick(
            self.now,
            Gate::Slot {
                payload: vp.allowed_bytes_per_packet,
            },
            &mut self.hooks,
        );
        for out in res.sent {
            self.transmit(out.class, out.packet, out.wire_len, out.created_at);
        }
        if let Some((kind, detail)) = res.failure {
            self.fail(kind, detail);
            return;
        }
        self.maybe_start_flush();
        self.vp_slot += 1;
        let next = SimTime::from_secs_f64(self.vp_slot as f64 / vp.packet_rate);
        let busy = !self.queue.is_empty() || self.hooks.extra_ready().is_some();
        if next < self.active_until || busy || (self.flush.started && next < self.flush.until) {
            self.q.push(next, Ev::SendSlot);
        }
    }

    fn maybe_start_flush(&mut self) {
        if self.flush.started || !self.traffic_done() || !self.queue.is_empty() {
            return;
        }
        self.flush.started = true;
        match &mut self.hooks.codec {
            TxCodec::Sliding { enc, .. } => {
                let Reliability::Sliding(cfg) = &self.sc.reliability else { return };
                let Some(first) = self.src_first else { return };
                let per = enc.config().sources_per_repair().unwrap_or(0) as u64;
                if per == 0 {
                    return;
                }
                let spacing = if self.src_count > 1 {
                    (self.src_last - first).as_nanos() / (self.src_count - 1)
                } else {
                    1_000_000
                };
                self.flush.interval = SimTime::from_nanos((spacing * per).max(1_000_000));
                self.flush.until = match cfg.flush_horizon {
                    Some(h) => self.now + SimTime::from_secs_f64(h),
                    None => self.end,
                };
                self.q.push(self.now + self.flush.interval, Ev::FeedbackTimer(Timer::Flush));
            }
            TxCodec::Block(b) => {
                b.finish_block();
                self.pump();
            }
            TxCodec::Arq { .. } => self.arm_arq_timer(),
            TxCodec::None => {}
        }
    }

    fn arq_rto(&self) -> SimTime {
        match self.srtt {
            Some(r) => SimTime::from_nanos(2 * r.as_nanos()).max(SimTime::from_millis(1)),
            None => SimTime::from_secs_f64(1.0),
        }
    }

    fn arm_arq_timer(&mut self) {
        if !self.arq_timer_armed {
            self.arq_timer_armed = true;
            let t = self.now + self.arq_rto();
            self.q.push(t, Ev::FeedbackTimer(Timer::Retransmit));
        }
    }

    fn on_timer(&mut self, t: Timer) {
        match t {
            Timer::Flush => {
                let TxCodec::Sliding { enc, flush_pending } = &mut self.hooks.codec else { return };
                if enc.window().is_empty() || self.now > self.flush.until {
                    return;
                }
                *flush_pending += 1;
                self.q.push(self.now + self.flush.interval, Ev::FeedbackTimer(Timer::Flush));
                if self.vp.is_some() {
                    self.q.push(self.now, Ev::SendSlot);
                }
                self.pump();
            }
            Timer::Retransmit => {
                self.arq_timer_armed = false;
                let rto = self.arq_rto();
                let TxCodec::Arq { state, pending } = &mut self.hooks.codec else { return };
                let again = state.on_timer(self.now, rto);
                pending.extend(again);
                let more = state.buffered() > 0;
                self.pump();
                if more {
                    self.arm_arq_timer();
                }
            }
            Timer::Feedback => {
                self.feedback_timer_armed = false;
                let has_data = self.loss.as_ref().is_some_and(|l| l.bytes_since_report > 0);
                if has_data {
                    self.send_feedback();
                }
                self.arm_feedback_timer(true);
            }
        }
    }

    fn transmit(&mut self, class: PacketClass, packet: WirePacket, wire_len: usize, created_at: Option<SimTime>) {
        let tseq = self.tseq;
        self.tseq += 1;
        let now = self.now;
        let mut queue_delay = None;
        let seq = match &packet {
            WirePacket::Source(p) => {
                if class == PacketClass::Source {
                    queue_delay = created_at.map(|c| now.saturating_sub(c));
                    self.first_tx.entry(p.seq).or_insert(now);
                    self.src_first.get_or_insert(now);
                    self.src_last = now;
                    self.src_count += 1;
                }
                Some(p.seq as u64)
            }
            WirePacket::Repair(r) => Some(r.repair_seq as u64),
            _ => Some(tseq),
        };
        self.records.push(TraceRecord {
            at: now,
            direction: Direction::Forward,
            kind: TraceKind::Packet(class, Stage::Tx),
            seq,
            size: wire_len,
            queue_delay,
            decoded_delay: None,
        });
        match self.fwd.transmit(now) {
            ChannelOutcome::Dropped => self.records.push(TraceRecord {
                at: now,
                direction: Direction::Forward,
                kind: TraceKind::Packet(class, Stage::Drop),
                seq,
                size: wire_len,
                queue_delay: None,
                decoded_delay: None,
            }),
            ChannelOutcome::Delivered { at } => {
                let dg = Datagram {
                    tseq,
                    sent_at: now,
                    rtt_hint: self.srtt,
                    class,
                    packet,
                    wire_len,
                };
                self.q.push(at, Ev::PacketArrival(dg));
            }
        }
    }

    fn transmit_reverse(&mut self, class: PacketClass, packet: WirePacket, echo: SimTime) {
        let wire_len = packet.encoded_len() + self.sc.transport_overhead;
        let seq = match &packet {
            WirePacket::Ack(a) => a.cumulative.map(|c| c as u64),
            _ => None,
        };
        let now = self.now;
        let row = |stage| TraceRecord {
            at: now,
            direction: Direction::Reverse,
            kind: TraceKind::Packet(class, stage),
            seq,
            size: wire_len,
            queue_delay: None,
            decoded_delay: None,
        };
        self.records.push(row(Stage::Tx));
        match self.rev.transmit(now) {
            ChannelOutcome::Dropped => self.records.push(row(Stage::Drop)),
            ChannelOutcome::Delivered { at } => {
                self.q.push(
                    at,
                    Ev::AckArrival(ReverseDatagram {
                        class,
                        packet,
                        wire_len,
                        echo,
                    }),
                );
            }
        }
    }

    fn on_forward_arrival(&mut self, dg: Datagram) {
        let seq = match &dg.packet {
            WirePacket::Source(p) => Some(p.seq as u64),
            WirePacket::Repair(r) => Some(r.repair_seq as u64),
            _ => Some(dg.tseq),
        };
        self.records.push(TraceRecord {
            at: self.now,
            direction: Direction::Forward,
            kind: TraceKind::Packet(dg.class, Stage::Rx),
            seq,
            size: dg.wire_len,
            queue_delay: None,
            decoded_delay: None,
        });
        if dg.rtt_hint.is_some() {
            self.rx_rtt_hint = dg.rtt_hint;
        }
        let rtt = dg.rtt_hint.unwrap_or(SimTime::ZERO);
        let new_loss_event = match &mut self.loss {
            Some(l) => {
                let first = l.last_report_at.is_none() && l.newest.is_none();
                let ev = l.on_arrival(dg.tseq, dg.sent_at, dg.wire_len, rtt, self.now);
                ev || first
            }
            None => false,
        };
        let out = self.rx.on_packet(&dg.packet, self.now, dg.rtt_hint);
        let owd = self.fwd.delay();
        for d in out.deliveries {
            if d.payload != payload_bytes(d.seq, d.payload.len()) {
                self.fail(FailureKind::Corrupt, alloc::format!("seq {} delivered with wrong contents", d.seq));
                return;
            }
            let recovered = d.recovered || dg.class == PacketClass::Retransmit;
            let decoded_delay = if recovered {
                let sent = self.first_tx.get(&d.seq).copied().unwrap_or(self.now);
                self.now.saturating_sub(sent + owd)
            } else {
                SimTime::ZERO
            };
            self.records.push(TraceRecord {
                at: self.now,
                direction: Direction::App,
                kind: if recovered { TraceKind::Recover } else { TraceKind::Deliver },
                seq: Some(d.seq as u64),
                size: d.payload.len(),
                queue_delay: None,
                decoded_delay: Some(decoded_delay),
            });
        }
        if let Some((kind, detail)) = out.error {
            self.fail(kind, detail);
            return;
        }
        if let Some(ack) = out.ack {
            self.transmit_reverse(PacketClass::Ack, WirePacket::Ack(ack), dg.sent_at);
        }
        if new_loss_event {
            self.send_feedback();
        }
        if self.loss.is_some() {
            self.arm_feedback_timer(false);
        }
    }

    fn arm_feedback_timer(&mut self, force: bool) {
        if self.feedback_timer_armed || (!force && self.loss.as_ref().is_none_or(|l| l.newest.is_none())) {
            return;
        }
        if self.now >= self.end {
            return;
        }
        self.feedback_timer_armed = true;
        let period = self.rx_rtt_hint.unwrap_or(DEFAULT_RTT);
        self.q.push(self.now + period, Ev::FeedbackTimer(Timer::Feedback));
    }

    fn send_feedback(&mut self) {
        let now = self.now;
        let fallback = self.rx_rtt_hint.unwrap_or(DEFAULT_RTT);
        let Some(l) = &mut self.loss else { return };
        let recv_rate = l.receive_rate(now, fallback);
        let p = l.history.loss_event_rate();
        let echo = l.echo(now);
        l.bytes_since_report = 0;
        l.last_report_at = Some(now);
        let report = FeedbackReport::new(recv_rate, p, echo);
        self.transmit_reverse(PacketClass::Feedback, WirePacket::Feedback(report), echo);
    }

    fn on_reverse_arrival(&mut self, dg: ReverseDatagram) {
        let seq = match &dg.packet {
            WirePacket::Ack(a) => a.cumulative.map(|c| c as u64),
            _ => None,
        };
        self.records.push(TraceRecord {
            at: self.now,
            direction: Direction::Reverse,
            kind: TraceKind::Packet(dg.class, Stage::Rx),
            seq,
            size: dg.wire_len,
            queue_delay: None,
            decoded_delay: None,
        });
        let sample = self.now.saturating_sub(dg.echo);
        self.srtt = Some(match self.srtt {
            None => sample,
            Some(r) => SimTime::from_nanos((7 * r.as_nanos() + sample.as_nanos()) / 8),
        });
        match dg.packet {
            WirePacket::Ack(ack) => self.on_ack(&ack),
            WirePacket::Feedback(fb) => self.on_feedback(&fb, sample),
            _ => {}
        }
    }

    fn on_ack(&mut self, ack: &AckPacket) {
        let suppression = SimTime::from_nanos(self.srtt.map_or(1_000_000_000, |r| r.as_nanos() * 3 / 2));
        match &mut self.hooks.codec {
            TxCodec::Sliding { enc, .. } => enc.on_ack(ack),
            TxCodec::Arq { state, pending } => {
                state.set_retransmit_timer(suppression);
                let gaps = state.on_ack(ack);
                let again = state.on_feedback(&gaps, self.now);
                pending.extend(again);
                self.pump();
            }
            _ => {}
        }
    }

    fn on_feedback(&mut self, fb: &FeedbackReport, rtt: SimTime) {
        let RateCtl::Tfrc(state) = &mut self.rate else { return };
        if self.vp.is_none() {
            // Tokens earned so far accrue at the old rate.
            self.queue.bucket.accrue(self.now, state.allowed_rate);
        }
        state.on_feedback(RateSample {
            recv_rate: fb.recv_rate(),
            loss_event_rate: fb.loss_event_rate(),
            rtt_sample: rtt.as_secs_f64(),
        });
        let x = state.allowed_rate;
        if let Some(vp) = &mut self.vp {
            vp.update(x);
        } else {
            // A faster rate may make the head packet affordable sooner.
            self.wake_at = None;
            self.pump();
        }
    }
}
