//! End-to-end simulator properties.

use std::collections::{BTreeMap, BTreeSet};

use fecsim_core::baselines::BlockCodeConfig;
use fecsim_core::metrics::compute_metrics;
use fecsim_core::netsim::{run, Channel, ChannelOutcome, Direction, FailureKind, PacketClass, SimulationTrace, Stage, TraceKind};
use fecsim_core::scenario::*;
use fecsim_core::traffic::{FrameKind, TraceFrame};
use fecsim_core::SimTime;
use proptest::prelude::*;

const SRC_TX: TraceKind = TraceKind::Packet(PacketClass::Source, Stage::Tx);

fn cbr(bitrate: f64, packet_size: usize) -> TrafficConfig {
    TrafficConfig::Cbr { bitrate, packet_size }
}

fn lossy(mut s: ScenarioConfig, p: f64) -> ScenarioConfig {
    s.channel_forward.model = LossModel::Bernoulli { p };
    s.plr = p;
    s
}

fn set_delay(s: &mut ScenarioConfig, owd: f64) {
    s.channel_forward.one_way_delay = owd;
    s.channel_reverse.one_way_delay = owd;
}

/// Recovery delays in nanoseconds, sorted.
fn recovery_delays(t: &SimulationTrace) -> Vec<u64> {
    let mut v: Vec<u64> = t
        .records
        .iter()
        .filter(|r| r.kind == TraceKind::Recover)
        .map(|r| r.decoded_delay.unwrap().as_nanos())
        .collect();
    v.sort_unstable();
    v
}

/// Bytes charged per packet under the scenario's accounting rule.
fn accounted(s: &ScenarioConfig, size: usize) -> usize {
    if s.rate.count_small_as_full {
        size.max(s.rate.segment_size)
    } else {
        size
    }
}

#[test]
fn lossless_cbr_passes_through_after_one_way_delay() {
    let mut s = scenario_foreman_proxy();
    s.traffic = cbr(400_000.0, 1000);
    s.reliability = Reliability::None;
    s.channel_forward.model = LossModel::Bernoulli { p: 0.0 };
    let t = run(&s);
    let sent: BTreeMap<u64, SimTime> = t.records.iter().filter(|r| r.kind == SRC_TX).map(|r| (r.seq.unwrap(), r.at)).collect();
    let delivered: Vec<_> = t.records.iter().filter(|r| r.kind == TraceKind::Deliver).collect();
    assert_eq!(sent.len(), 500);
    assert_eq!(delivered.len(), sent.len());
    for d in delivered {
        assert_eq!(d.at - sent[&d.seq.unwrap()], SimTime::from_millis(50));
    }
}

#[test]
fn total_loss_overflows_the_window() {
    let mut s = lossy(scenario_foreman_proxy(), 1.0);
    s.reliability = Reliability::Sliding(SlidingConfig {
        max_window: 256,
        ..SlidingConfig::default()
    });
    let t = run(&s);
    assert_eq!(t.failure.as_ref().map(|f| f.kind), Some(FailureKind::WindowOverflow));
    assert_eq!(t.records.last().unwrap().kind, TraceKind::Failure(FailureKind::WindowOverflow));
    assert_eq!(t.count(TraceKind::Deliver) + t.count(TraceKind::Recover), 0);
    assert!(compute_metrics(&t, s.deadline, false).is_err());
}

#[test]
fn queue_bound_truncates_the_trace() {
    let mut s = scenario_foreman_proxy();
    s.rate.mode = RateMode::Fixed;
    s.rate.fixed_rate = 10_000.0;
    s.rate.max_queue = 50;
    let t = run(&s);
    assert_eq!(t.failure.as_ref().map(|f| f.kind), Some(FailureKind::QueueOverflow));
}

#[test]
fn identical_configs_give_identical_traces() {
    for s in [
        lossy(scenario_foreman_proxy(), 0.05),
        {
            let mut s = scenario_foreman_proxy();
            s.reliability = Reliability::Arq;
            s.rate.mode = RateMode::Tfrc;
            s.channel_forward.model = LossModel::gilbert_elliott_default();
            s
        },
    ] {
        assert_eq!(run(&s), run(&s));
    }
}

#[test]
fn gilbert_elliott_stationary_loss() {
    let mut c = Channel::new(&ChannelConfig {
        model: LossModel::gilbert_elliott_default(),
        one_way_delay: 0.0,
        seed: 99,
    });
    let n = 1_000_000;
    let lost = (0..n).filter(|_| c.transmit(SimTime::ZERO) == ChannelOutcome::Dropped).count();
    let rate = lost as f64 / n as f64;
    let expected = 0.01 / (0.01 + 0.5);
    assert!((rate - expected).abs() < 0.002, "{rate} vs {expected}");
}

fn check_conservation(t: &SimulationTrace) {
    let sent: BTreeSet<u64> = t.records.iter().filter(|r| r.kind == SRC_TX).map(|r| r.seq.unwrap()).collect();
    let created: BTreeMap<u64, SimTime> = t
        .records
        .iter()
        .filter(|r| r.kind == SRC_TX)
        .map(|r| (r.seq.unwrap(), r.at - r.queue_delay.unwrap()))
        .collect();
    let mut seen = BTreeSet::new();
    for r in t.records.iter().filter(|r| matches!(r.kind, TraceKind::Deliver | TraceKind::Recover)) {
        let seq = r.seq.unwrap();
        assert!(sent.contains(&seq), "delivered {seq} was never sent");
        assert!(seen.insert(seq), "{seq} delivered twice");
        assert!(r.at - created[&seq] >= t.one_way_delay);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn conservation_across_modes(seed in any::<u64>(), mode in 0usize..4, p in 0.0f64..0.1) {
        let mut s = lossy(scenario_foreman_proxy().with_seed(seed), p);
        s.duration = 4.0;
        s.reliability = match mode {
            0 => Reliability::None,
            1 => Reliability::Sliding(SlidingConfig::default()),
            2 => Reliability::Block(BlockCodeConfig { k: 7, n: 8 }),
            _ => Reliability::Arq,
        };
        check_conservation(&run(&s));
    }

    #[test]
    fn sliding_recovery_delays_ignore_rtt(seed in any::<u64>(), p in 0.0f64..0.06) {
        let base = lossy(scenario_foreman_proxy().with_seed(seed), p);
        let mut reference = None;
        for owd in [0.010, 0.050, 0.100, 0.200] {
            let mut s = base.clone();
            set_delay(&mut s, owd);
            let t = run(&s);
            prop_assert!(t.failure.is_none());
            let d = recovery_delays(&t);
            match &reference {
                None => reference = Some(d),
                Some(r) => prop_assert_eq!(r, &d),
            }
        }
    }
}

#[test]
fn arq_recovery_costs_at_least_one_round_trip() {
    for owd in [0.01, 0.05, 0.1] {
        let mut s = lossy(scenario_foreman_proxy().with_seed(3), 0.03);
        s.reliability = Reliability::Arq;
        set_delay(&mut s, owd);
        let t = run(&s);
        let d = recovery_delays(&t);
        assert!(!d.is_empty());
        let rtt = 2 * SimTime::from_secs_f64(owd).as_nanos();
        assert!(d.iter().all(|&x| x >= rtt), "owd {owd}");
    }
}

#[test]
fn block_recovery_delay_grows_with_block_size() {
    let mut means = Vec::new();
    for k in [3, 7, 15] {
        let mut s = lossy(scenario_foreman_proxy().with_seed(11), 0.02);
        s.traffic = cbr(400_000.0, 500);
        s.reliability = Reliability::Block(BlockCodeConfig { k, n: k + 1 });
        let d = recovery_delays(&run(&s));
        means.push(d.iter().sum::<u64>() as f64 / d.len() as f64);
    }
    assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
}

#[test]
fn measured_overhead_matches_rho() {
    for rho in [0.1, 0.125, 0.2] {
        let mut s = lossy(scenario_foreman_proxy().with_seed(2), 0.02);
        s.reliability = Reliability::Sliding(SlidingConfig {
            rho,
            ..SlidingConfig::default()
        });
        let m = compute_metrics(&run(&s), s.deadline, false).unwrap();
        assert!((m.repair_overhead_measured - rho).abs() <= 0.01, "rho {rho}: {}", m.repair_overhead_measured);
        assert!(m.deadline_delivery_ratio <= m.eventual_delivery_ratio);
    }
}

fn fixed_rate(s: &mut ScenarioConfig, x: f64) {
    s.rate.mode = RateMode::Fixed;
    s.rate.fixed_rate = x;
}

#[test]
fn inline_mode_respects_the_rate_over_every_second() {
    let x = 80_000.0;
    let mut s = lossy(scenario_foreman_proxy().with_seed(4), 0.03);
    s.traffic = TrafficConfig::Greedy { payload: 1000 };
    fixed_rate(&mut s, x);
    s.duration = 12.0;
    let t = run(&s);
    let tx: Vec<(f64, usize)> = t
        .records
        .iter()
        .filter(|r| r.direction == Direction::Forward && matches!(r.kind, TraceKind::Packet(_, Stage::Tx)))
        .map(|r| (r.at.as_secs_f64(), accounted(&s, r.size)))
        .collect();
    let mut start = 1.0;
    while start + 1.0 <= 12.0 {
        let bytes: usize = tx.iter().filter(|(at, _)| *at >= start && *at < start + 1.0).map(|(_, b)| b).sum();
        assert!(bytes as f64 <= 1.1 * x, "window at {start}: {bytes}");
        start += 0.25;
    }
}

#[test]
fn vp_holds_packet_rate_and_tracks_byte_rate() {
    let r = 100.0;
    let mut s = scenario_foreman_proxy().with_seed(8);
    s.traffic = TrafficConfig::Greedy { payload: 1200 };
    s.coupling = CouplingMode::Vp;
    s.rate.mode = RateMode::Tfrc;
    s.rate.vp_packet_rate = r;
    s.channel_forward.model = LossModel::GilbertElliott {
        p_gb: 0.02,
        p_bg: 0.3,
        loss_good: 0.0,
        loss_bad: 0.5,
    };
    s.duration = 30.0;
    let t = run(&s);
    let tx: Vec<_> = t
        .records
        .iter()
        .filter(|r| r.direction == Direction::Forward && matches!(r.kind, TraceKind::Packet(_, Stage::Tx)))
        .filter(|r| r.at.as_secs_f64() >= 5.0 && r.at.as_secs_f64() < 30.0)
        .collect();
    let rate = tx.len() as f64 / 25.0;
    assert!((rate - r).abs() <= 0.01 * r, "{rate}");
    let sizes: BTreeSet<usize> = tx.iter().map(|r| r.size).collect();
    assert!(sizes.len() > 3, "packet size never adapted");
}

/// One I-frame split into 12 fragments at an allowed rate worth four
/// fragments per frame interval, with a four-fragment bucket.
#[test]
fn i_frame_burst_queues_for_two_frame_intervals() {
    let frag = 965;
    let wire = frag + 7 + 28;
    let fps = 30.0;
    let mut s = scenario_foreman_proxy();
    s.traffic = TrafficConfig::Trace {
        frames: vec![TraceFrame {
            frame_index: 0,
            kind: FrameKind::I,
            size: 12 * frag,
        }],
        frame_rate: fps,
        max_payload: frag,
    };
    s.reliability = Reliability::None;
    s.channel_forward.model = LossModel::Bernoulli { p: 0.0 };
    fixed_rate(&mut s, 4.0 * wire as f64 * fps);
    s.rate.count_small_as_full = false;
    s.rate.bucket_depth = 4 * wire;
    let m = compute_metrics(&run(&s), s.deadline, false).unwrap();
    assert!((m.max_sender_queue_delay - 2.0 / fps).abs() < 1e-8, "{}", m.max_sender_queue_delay);
}

#[test]
fn queueing_delay_grows_with_i_frame_size_over_rate() {
    let mut last = 0.0;
    for x in [400_000.0, 200_000.0, 120_000.0, 90_000.0] {
        let mut s = scenario_foreman_proxy();
        s.reliability = Reliability::None;
        fixed_rate(&mut s, x);
        s.rate.count_small_as_full = false;
        let m = compute_metrics(&run(&s), s.deadline, false).unwrap();
        assert!(m.max_sender_queue_delay > last, "X {x}: {}", m.max_sender_queue_delay);
        last = m.max_sender_queue_delay;
    }
    let mut prev = 0.0;
    for share in [0.15, 0.25, 0.40] {
        let mut s = scenario_foreman_proxy();
        s.reliability = Reliability::None;
        fixed_rate(&mut s, 120_000.0);
        s.rate.count_small_as_full = false;
        if let TrafficConfig::Vbr { i_frame_byte_share, .. } = &mut s.traffic {
            *i_frame_byte_share = share;
        }
        let m = compute_metrics(&run(&s), s.deadline, false).unwrap();
        assert!(m.max_sender_queue_delay > prev, "share {share}: {} after {prev}", m.max_sender_queue_delay);
        prev = m.max_sender_queue_delay;
    }
}

#[test]
fn small_packets_counted_full_cost_throughput() {
    let mut goodput = Vec::new();
    for full in [true, false] {
        let mut s = scenario_foreman_proxy();
        s.reliability = Reliability::None;
        s.traffic = TrafficConfig::Greedy { payload: 400 };
        fixed_rate(&mut s, 150_000.0);
        s.rate.count_small_as_full = full;
        goodput.push(compute_metrics(&run(&s), s.deadline, false).unwrap().mean_goodput);
    }
    assert!(goodput[0] < goodput[1] * 0.5, "{goodput:?}");
}
