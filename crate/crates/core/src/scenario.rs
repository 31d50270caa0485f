//! Experiment input: everything a simulation run needs, plus the canned
//! scenarios.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::baselines::BlockCodeConfig;
use crate::traffic::{redundancy_overhead, TraceFrame, VbrVideoConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{field}: {msg}")]
    Invalid { field: &'static str, msg: String },
}

fn invalid(field: &'static str, msg: &str) -> ConfigError {
    ConfigError::Invalid {
        field,
        msg: msg.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrafficConfig {
    /// GoP-structured video; the frame count follows from the scenario
    /// duration.
    Vbr {
        bitrate: f64,
        frame_rate: f64,
        gop_size: u32,
        i_frame_byte_share: f64,
        max_payload: usize,
    },
    Cbr { bitrate: f64, packet_size: usize },
    /// Always backlogged: a fragment of `payload` bytes is ready whenever the
    /// sender may transmit.
    Greedy { payload: usize },
    /// Recorded frame sizes replayed at `frame_rate`.
    Trace {
        frames: Vec<TraceFrame>,
        frame_rate: f64,
        max_payload: usize,
    },
}

impl TrafficConfig {
    pub fn name(&self) -> &'static str {
        match self {
            TrafficConfig::Vbr { .. } => "vbr",
            TrafficConfig::Cbr { .. } => "cbr",
            TrafficConfig::Greedy { .. } => "greedy",
            TrafficConfig::Trace { .. } => "trace",
        }
    }

    pub fn vbr(&self, duration: f64) -> Option<VbrVideoConfig> {
        match *self {
            TrafficConfig::Vbr {
                bitrate,
                frame_rate,
                gop_size,
                i_frame_byte_share,
                max_payload,
            } => Some(VbrVideoConfig {
                bitrate,
                frame_rate,
                gop_size,
                i_frame_byte_share,
                max_payload,
                duration_frames: libm::round(duration * frame_rate) as u64,
            }),
            _ => None,
        }
    }

    /// Largest source payload this traffic can produce.
    pub fn max_payload(&self) -> usize {
        match self {
            TrafficConfig::Vbr { max_payload, .. } | TrafficConfig::Trace { max_payload, .. } => *max_payload,
            TrafficConfig::Cbr { packet_size, .. } => *packet_size,
            TrafficConfig::Greedy { payload } => *payload,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LossModel {
    Bernoulli { p: f64 },
    GilbertElliott {
        p_gb: f64,
        p_bg: f64,
        loss_good: f64,
        loss_bad: f64,
    },
    /// Drops exactly the listed transmission indices (0-based, per
    /// direction). Consumes no randomness.
    Scripted { drops: Vec<u64> },
}

impl LossModel {
    /// Defaults: mean burst length 2 at a ~2% stationary loss rate.
    pub fn gilbert_elliott_default() -> Self {
        LossModel::GilbertElliott {
            p_gb: 0.01,
            p_bg: 0.5,
            loss_good: 0.0,
            loss_bad: 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossModel::Bernoulli { .. } => "bernoulli",
            LossModel::GilbertElliott { .. } => "gilbert_elliott",
            LossModel::Scripted { .. } => "scripted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub model: LossModel,
    /// seconds
    pub one_way_delay: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn lossless(one_way_delay: f64, seed: u64) -> Self {
        ChannelConfig {
            model: LossModel::Bernoulli { p: 0.0 },
            one_way_delay,
            seed,
        }
    }

    fn validate(&self, field: &'static str) -> Result<(), ConfigError> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        let ok = match &self.model {
            LossModel::Bernoulli { p } => prob(*p),
            LossModel::GilbertElliott {
                p_gb,
                p_bg,
                loss_good,
                loss_bad,
            } => [*p_gb, *p_bg, *loss_good, *loss_bad].into_iter().all(prob),
            LossModel::Scripted { .. } => true,
        };
        if !ok {
            return Err(invalid(field, "probabilities must lie in [0, 1]"));
        }
        if !(self.one_way_delay >= 0.0) || !self.one_way_delay.is_finite() {
            return Err(invalid(field, "one_way_delay must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AckCadence {
    PerPacket,
    PerRtt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlidingConfig {
    pub rho: f64,
    pub max_window: usize,
    pub ack_cadence: AckCadence,
    /// How long after the last source the sender keeps adding repairs while
    /// its window is non-empty; `None` uses the scenario deadline.
    pub flush_horizon: Option<f64>,
}

impl Default for SlidingConfig {
    fn default() -> Self {
        SlidingConfig {
            rho: 0.125,
            max_window: 2048,
            ack_cadence: AckCadence::PerPacket,
            flush_horizon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reliability {
    None,
    Sliding(SlidingConfig),
    Block(BlockCodeConfig),
    Arq,
}

impl Reliability {
    pub fn name(&self) -> &'static str {
        match self {
            Reliability::None => "none",
            Reliability::Sliding(_) => "sliding",
            Reliability::Block(_) => "block",
            Reliability::Arq => "arq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// Source and repair packets both spend congestion-controlled tokens.
    Inline,
    /// Only source packets spend tokens; repairs go out on top.
    Outside,
    /// Fixed packet rate; the controller sets the packet size.
    Vp,
}

impl CouplingMode {
    pub fn name(self) -> &'static str {
        match self {
            CouplingMode::Inline => "inline",
            CouplingMode::Outside => "outside",
            CouplingMode::Vp => "vp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateMode {
    /// No rate gate: packets leave as soon as they are produced.
    None,
    /// Constant allowed rate `RateConfig::fixed_rate`.
    Fixed,
    /// TFRC-style feedback loop.
    Tfrc,
}

impl RateMode {
    pub fn name(self) -> &'static str {
        match self {
            RateMode::None => "none",
            RateMode::Fixed => "fixed",
            RateMode::Tfrc => "tfrc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateConfig {
    pub mode: RateMode,
    /// bytes/s, for [`RateMode::Fixed`]
    pub fixed_rate: f64,
    /// TFRC segment size `s`, bytes.
    pub segment_size: usize,
    /// Charge packets smaller than `segment_size` as full segments.
    pub count_small_as_full: bool,
    /// Token bucket depth, bytes.
    pub bucket_depth: usize,
    /// Keep transmitting padding at the allowed rate when the queue is empty.
    pub padding: bool,
    /// Sender queue bound in fragments.
    pub max_queue: usize,
    /// Packets/s in [`CouplingMode::Vp`].
    pub vp_packet_rate: f64,
    pub vp_min_payload: usize,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            mode: RateMode::None,
            fixed_rate: 150_000.0,
            segment_size: 1500,
            count_small_as_full: true,
            bucket_depth: 1500,
            padding: false,
            max_queue: 100_000,
            vp_packet_rate: 100.0,
            vp_min_payload: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub traffic: TrafficConfig,
    pub channel_forward: ChannelConfig,
    pub channel_reverse: ChannelConfig,
    pub reliability: Reliability,
    pub coupling: CouplingMode,
    pub rate: RateConfig,
    /// Bytes added to every datagram below the codec header (IP + UDP).
    pub transport_overhead: usize,
    /// seconds
    pub deadline: f64,
    /// Traffic duration, seconds.
    pub duration: f64,
    /// Extra simulated time after `duration` for in-flight recovery.
    pub drain: f64,
    pub coefficient_seed: u64,
    /// Nominal loss fraction used for provisioning checks.
    pub plr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Warning(pub String);

impl ScenarioConfig {
    pub fn validate(&self) -> Result<Vec<Warning>, ConfigError> {
        let mut warnings = Vec::new();
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(invalid("duration", "must be positive"));
        }
        if !(self.drain >= 0.0) || !self.drain.is_finite() {
            return Err(invalid("drain", "must be >= 0"));
        }
        if !(self.deadline > 0.0) {
            return Err(invalid("deadline", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.plr) {
            return Err(invalid("plr", "must lie in [0, 1]"));
        }
        self.channel_forward.validate("channel.forward")?;
        self.channel_reverse.validate("channel.reverse")?;
        match &self.traffic {
            TrafficConfig::Vbr { .. } => {
                let v = self.traffic.vbr(self.duration).expect("vbr");
                v.validate().map_err(|e| ConfigError::Invalid {
                    field: "traffic",
                    msg: e.to_string(),
                })?;
            }
            TrafficConfig::Cbr { bitrate, packet_size } => {
                if !(*bitrate > 0.0) || *packet_size == 0 {
                    return Err(invalid("traffic", "cbr needs positive bitrate and packet_size"));
                }
            }
            TrafficConfig::Greedy { payload } => {
                if *payload == 0 {
                    return Err(invalid("traffic.payload", "must be positive"));
                }
                if self.rate.mode == RateMode::None {
                    return Err(invalid("traffic", "greedy traffic needs a rate mode other than none"));
                }
            }
            TrafficConfig::Trace {
                frame_rate,
                max_payload,
                ..
            } => {
                if !(*frame_rate > 0.0) || *max_payload == 0 {
                    return Err(invalid("traffic", "trace needs positive frame_rate and max_payload"));
                }
            }
        }
        if self.traffic.max_payload() > crate::wire::MAX_PAYLOAD {
            return Err(invalid("traffic", "payloads are limited to 65000 bytes"));
        }
        match &self.reliability {
            Reliability::Sliding(s) => {
                if !(0.0..1.0).contains(&s.rho) {
                    return Err(invalid("reliability.rho", "must lie in [0, 1)"));
                }
                if s.max_window == 0 {
                    return Err(invalid("reliability.max_window", "must be positive"));
                }
                if s.rho <= self.plr {
                    warnings.push(Warning(alloc::format!(
                        "redundancy ratio {} does not exceed the nominal loss rate {}",
                        s.rho,
                        self.plr
                    )));
                }
            }
            Reliability::Block(b) => {
                b.validate().map_err(|e| ConfigError::Invalid {
                    field: "reliability",
                    msg: e.to_string(),
                })?;
            }
            Reliability::None | Reliability::Arq => {}
        }
        if self.rate.mode != RateMode::None {
            if self.rate.segment_size == 0 || self.rate.bucket_depth == 0 {
                return Err(invalid("rate", "segment_size and bucket_depth must be positive"));
            }
            if self.rate.mode == RateMode::Fixed && !(self.rate.fixed_rate > 0.0) {
                return Err(invalid("rate.fixed_rate", "must be positive"));
            }
        }
        if self.coupling == CouplingMode::Vp {
            if self.rate.mode == RateMode::None {
                return Err(invalid("coupling", "vp needs a rate mode other than none"));
            }
            if !(self.rate.vp_packet_rate > 0.0) {
                return Err(invalid("rate.vp_packet_rate", "must be positive"));
            }
        }
        if self.rate.mode == RateMode::None && self.rate.padding {
            warnings.push(Warning("padding has no effect without a rate mode".to_string()));
        }
        Ok(warnings)
    }

    /// Sender RNG streams derived from a base seed. `base + i` gives
    /// replicate `i`.
    pub fn with_seed(mut self, base: u64) -> Self {
        self.channel_forward.seed = base;
        self.channel_reverse.seed = base.wrapping_add(0x5EED_0000_0001);
        self.coefficient_seed = base.wrapping_add(0x5EED_0000_0002);
        self
    }

    /// Offsets every seed by `i`, keeping the streams distinct.
    pub fn replicate(mut self, i: u64) -> Self {
        self.channel_forward.seed = self.channel_forward.seed.wrapping_add(i);
        self.channel_reverse.seed = self.channel_reverse.seed.wrapping_add(i);
        self.coefficient_seed = self.coefficient_seed.wrapping_add(i);
        self
    }

    pub fn mode_label(&self) -> String {
        alloc::format!("{}-{}", self.reliability.name(), self.coupling.name())
    }
}

/// Reference video bit rates, bits/s.
pub const FOREMAN_PROTECTED_BITRATE: f64 = 441_370.0;
pub const FOREMAN_UNPROTECTED_BITRATE: f64 = 531_130.0;

/// Paired video experiment: the lower-rate encoding protected by the
/// sliding-window code at 12.5% redundancy over a 1% Bernoulli channel.
///
/// The 50 ms one-way delay and the 500-byte fragment size are assumed
/// values; 500 bytes keeps a repair within the 150 ms budget for P-frame
/// losses.
pub fn scenario_foreman_proxy() -> ScenarioConfig {
    ScenarioConfig {
        name: "foreman-proxy".to_string(),
        traffic: TrafficConfig::Vbr {
            bitrate: FOREMAN_PROTECTED_BITRATE,
            frame_rate: 30.0,
            gop_size: 30,
            i_frame_byte_share: 0.25,
            max_payload: 500,
        },
        channel_forward: ChannelConfig {
            model: LossModel::Bernoulli { p: 0.01 },
            one_way_delay: 0.050,
            seed: 1,
        },
        channel_reverse: ChannelConfig::lossless(0.050, 2),
        reliability: Reliability::Sliding(SlidingConfig::default()),
        coupling: CouplingMode::Inline,
        rate: RateConfig::default(),
        transport_overhead: 28,
        deadline: 0.150,
        duration: 10.0,
        drain: 1.0,
        coefficient_seed: 3,
        plr: 0.01,
    }
}

/// The higher-rate encoding without protection, on the same channel.
pub fn scenario_foreman_unprotected() -> ScenarioConfig {
    let mut s = scenario_foreman_proxy();
    s.name = "foreman-unprotected".to_string();
    s.reliability = Reliability::None;
    if let TrafficConfig::Vbr { bitrate, .. } = &mut s.traffic {
        *bitrate = FOREMAN_UNPROTECTED_BITRATE;
    }
    s
}

/// Overhead of the unprotected encoding over the protected one (~16.9%).
pub fn foreman_bitrate_overhead() -> f64 {
    redundancy_overhead(FOREMAN_UNPROTECTED_BITRATE, FOREMAN_PROTECTED_BITRATE).fraction
}
