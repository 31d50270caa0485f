//! Scenario files.
//!
//! A scenario file is TOML restricted to scalar values (and one integer
//! array, `channel.*.drops`) under dotted keys, for example
//!
//! ```toml
//! base = "foreman-proxy"
//! duration = 10.0
//!
//! [reliability]
//! kind = "sliding"
//! rho = 0.125
//!
//! [channel.forward]
//! model = "bernoulli"
//! p = 0.01
//! ```
//!
//! Every key may also be given on the command line as `--reliability.rho=0.2`
//! (or `--reliability.rho 0.2`); command-line values win. Keys that are not
//! set keep the value from `base`. See [`KEYS`] for the full list.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fecsim_core::baselines::BlockCodeConfig;
use fecsim_core::scenario::*;
use thiserror::Error;
use toml::Value;

use crate::traffic_csv;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
    #[error("trace file: {0}")]
    Trace(String),
}

fn bad(key: &str, msg: impl Into<String>) -> LoadError {
    LoadError::BadValue {
        key: key.to_string(),
        msg: msg.into(),
    }
}

/// Every recognized key.
pub const KEYS: &[&str] = &[
    "base",
    "name",
    "seed",
    "deadline",
    "duration",
    "drain",
    "plr",
    "transport_overhead",
    "coefficient_seed",
    "coupling",
    "traffic.kind",
    "traffic.bitrate",
    "traffic.frame_rate",
    "traffic.gop_size",
    "traffic.i_frame_byte_share",
    "traffic.max_payload",
    "traffic.packet_size",
    "traffic.payload",
    "traffic.trace_file",
    "channel.one_way_delay",
    "channel.forward.model",
    "channel.forward.p",
    "channel.forward.p_gb",
    "channel.forward.p_bg",
    "channel.forward.loss_good",
    "channel.forward.loss_bad",
    "channel.forward.drops",
    "channel.forward.one_way_delay",
    "channel.forward.seed",
    "channel.reverse.model",
    "channel.reverse.p",
    "channel.reverse.p_gb",
    "channel.reverse.p_bg",
    "channel.reverse.loss_good",
    "channel.reverse.loss_bad",
    "channel.reverse.drops",
    "channel.reverse.one_way_delay",
    "channel.reverse.seed",
    "reliability.kind",
    "reliability.rho",
    "reliability.max_window",
    "reliability.ack_cadence",
    "reliability.flush_horizon",
    "reliability.k",
    "reliability.n",
    "rate.mode",
    "rate.fixed_rate",
    "rate.segment_size",
    "rate.count_small_as_full",
    "rate.bucket_depth",
    "rate.padding",
    "rate.max_queue",
    "rate.vp_packet_rate",
    "rate.vp_min_payload",
];

/// Flat `dotted.key -> value` settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, Value>,
    /// Directory that relative paths (the trace file) resolve against.
    dir: Option<PathBuf>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, LoadError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| LoadError::Parse(e.message().to_string()))?;
        let mut s = Settings::default();
        flatten("", table, &mut s.values);
        for k in s.values.keys() {
            if !KEYS.contains(&k.as_str()) {
                return Err(LoadError::UnknownKey(k.clone()));
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut s = Self::parse(&text)?;
        s.dir = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    /// Sets `key` from command-line text. The text is read as a TOML value
    /// when it parses as one and as a bare string otherwise.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), LoadError> {
        if !KEYS.contains(&key) {
            return Err(LoadError::UnknownKey(key.to_string()));
        }
        self.values.insert(key.to_string(), parse_value(raw));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, LoadError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(bad(key, "expected a number")),
        }
    }

    fn u64(&self, key: &str) -> Result<Option<u64>, LoadError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(bad(key, "expected a non-negative integer")),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, LoadError> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    fn bool(&self, key: &str) -> Result<Option<bool>, LoadError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(bad(key, "expected true or false")),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&str>, LoadError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(bad(key, "expected a string")),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<u64>>, LoadError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                    _ => Err(bad(key, "expected non-negative integers")),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(_) => Err(bad(key, "expected an array")),
        }
    }

    /// Builds and validates the scenario.
    pub fn scenario(&self) -> Result<(ScenarioConfig, Vec<Warning>), LoadError> {
        let s = self.build()?;
        let warnings = s.validate()?;
        Ok((s, warnings))
    }

    /// Builds the scenario without validating it.
    pub fn build(&self) -> Result<ScenarioConfig, LoadError> {
        let mut s = match self.str("base")?.unwrap_or("foreman-proxy") {
            "foreman-proxy" => scenario_foreman_proxy(),
            "foreman-unprotected" => scenario_foreman_unprotected(),
            other => return Err(bad("base", format!("unknown scenario `{other}`"))),
        };
        if let Some(n) = self.str("name")? {
            s.name = n.to_string();
        }
        if let Some(seed) = self.u64("seed")? {
            s = s.with_seed(seed);
        }
        set(&mut s.deadline, self.f64("deadline")?);
        set(&mut s.duration, self.f64("duration")?);
        set(&mut s.drain, self.f64("drain")?);
        set(&mut s.plr, self.f64("plr")?);
        set(&mut s.transport_overhead, self.usize("transport_overhead")?);
        set(&mut s.coefficient_seed, self.u64("coefficient_seed")?);
        if let Some(c) = self.str("coupling")? {
            s.coupling = parse_coupling(c).ok_or_else(|| bad("coupling", "expected inline, outside or vp"))?;
        }
        s.traffic = self.traffic(&s.traffic)?;
        if let Some(d) = self.f64("channel.one_way_delay")? {
            s.channel_forward.one_way_delay = d;
            s.channel_reverse.one_way_delay = d;
        }
        self.channel("channel.forward", &mut s.channel_forward)?;
        self.channel("channel.reverse", &mut s.channel_reverse)?;
        s.reliability = self.reliability(&s.reliability)?;
        self.rate(&mut s.rate)?;
        Ok(s)
    }

    fn traffic(&self, cur: &TrafficConfig) -> Result<TrafficConfig, LoadError> {
        let kind = self.str("traffic.kind")?.unwrap_or(cur.name());
        let (d_bitrate, d_fps, d_gop, d_share, d_max) = match cur {
            TrafficConfig::Vbr {
                bitrate,
                frame_rate,
                gop_size,
                i_frame_byte_share,
                max_payload,
            } => (*bitrate, *frame_rate, *gop_size, *i_frame_byte_share, *max_payload),
            TrafficConfig::Cbr { bitrate, packet_size } => (*bitrate, 30.0, 30, 0.25, *packet_size),
            TrafficConfig::Greedy { payload } => (FOREMAN_PROTECTED_BITRATE, 30.0, 30, 0.25, *payload),
            TrafficConfig::Trace {
                frame_rate,
                max_payload,
                ..
            } => (FOREMAN_PROTECTED_BITRATE, *frame_rate, 30, 0.25, *max_payload),
        };
        let bitrate = self.f64("traffic.bitrate")?.unwrap_or(d_bitrate);
        let frame_rate = self.f64("traffic.frame_rate")?.unwrap_or(d_fps);
        let max_payload = self.usize("traffic.max_payload")?.unwrap_or(d_max);
        Ok(match kind {
            "vbr" => TrafficConfig::Vbr {
                bitrate,
                frame_rate,
                gop_size: self.u64("traffic.gop_size")?.map_or(d_gop, |g| g as u32),
                i_frame_byte_share: self.f64("traffic.i_frame_byte_share")?.unwrap_or(d_share),
                max_payload,
            },
            "cbr" => TrafficConfig::Cbr {
                bitrate,
                packet_size: self.usize("traffic.packet_size")?.unwrap_or(d_max),
            },
            "greedy" => TrafficConfig::Greedy {
                payload: self.usize("traffic.payload")?.unwrap_or(d_max),
            },
            "trace" => {
                let frames = match (self.str("traffic.trace_file")?, cur) {
                    (Some(p), _) => {
                        let path = match &self.dir {
                            Some(d) if Path::new(p).is_relative() => d.join(p),
                            _ => PathBuf::from(p),
                        };
                        traffic_csv::read_trace_file(&path).map_err(|e| LoadError::Trace(e.to_string()))?
                    }
                    (None, TrafficConfig::Trace { frames, .. }) => frames.clone(),
                    (None, _) => return Err(bad("traffic.trace_file", "trace traffic needs a trace file")),
                };
                TrafficConfig::Trace {
                    frames,
                    frame_rate,
                    max_payload,
                }
            }
            other => return Err(bad("traffic.kind", format!("unknown traffic `{other}`"))),
        })
    }

    fn channel(&self, prefix: &str, ch: &mut ChannelConfig) -> Result<(), LoadError> {
        let key = |k: &str| format!("{prefix}.{k}");
        let model_key = key("model");
        let kind = self.str(&model_key)?.unwrap_or(ch.model.name());
        let (dp, dgb, dbg, dlg, dlb) = match &ch.model {
            LossModel::Bernoulli { p } => (*p, 0.01, 0.5, 0.0, 1.0),
            LossModel::GilbertElliott {
                p_gb,
                p_bg,
                loss_good,
                loss_bad,
            } => (0.0, *p_gb, *p_bg, *loss_good, *loss_bad),
            LossModel::Scripted { .. } => (0.0, 0.01, 0.5, 0.0, 1.0),
        };
        ch.model = match kind {
            "bernoulli" => LossModel::Bernoulli {
                p: self.f64(&key("p"))?.unwrap_or(dp),
            },
            "gilbert_elliott" => LossModel::GilbertElliott {
                p_gb: self.f64(&key("p_gb"))?.unwrap_or(dgb),
                p_bg: self.f64(&key("p_bg"))?.unwrap_or(dbg),
                loss_good: self.f64(&key("loss_good"))?.unwrap_or(dlg),
                loss_bad: self.f64(&key("loss_bad"))?.unwrap_or(dlb),
            },
            "scripted" => {
                let drops = match (self.list(&key("drops"))?, &ch.model) {
                    (Some(d), _) => d,
                    (None, LossModel::Scripted { drops }) => drops.clone(),
                    (None, _) => Vec::new(),
                };
                LossModel::Scripted { drops }
            }
            other => return Err(bad(&model_key, format!("unknown loss model `{other}`"))),
        };
        set(&mut ch.one_way_delay, self.f64(&key("one_way_delay"))?);
        set(&mut ch.seed, self.u64(&key("seed"))?);
        Ok(())
    }

    fn reliability(&self, cur: &Reliability) -> Result<Reliability, LoadError> {
        let kind = self.str("reliability.kind")?.unwrap_or(cur.name());
        Ok(match kind {
            "none" => Reliability::None,
            "arq" => Reliability::Arq,
            "sliding" => {
                let mut c = match cur {
                    Reliability::Sliding(c) => c.clone(),
                    _ => SlidingConfig::default(),
                };
                set(&mut c.rho, self.f64("reliability.rho")?);
                set(&mut c.max_window, self.usize("reliability.max_window")?);
                if let Some(a) = self.str("reliability.ack_cadence")? {
                    c.ack_cadence = match a {
                        "per_packet" => AckCadence::PerPacket,
                        "per_rtt" => AckCadence::PerRtt,
                        _ => return Err(bad("reliability.ack_cadence", "expected per_packet or per_rtt")),
                    };
                }
                if let Some(h) = self.f64("reliability.flush_horizon")? {
                    c.flush_horizon = Some(h);
                }
                Reliability::Sliding(c)
            }
            "block" => {
                let mut c = match cur {
                    Reliability::Block(c) => *c,
                    _ => BlockCodeConfig { k: 7, n: 8 },
                };
                set(&mut c.k, self.usize("reliability.k")?);
                set(&mut c.n, self.usize("reliability.n")?);
                Reliability::Block(c)
            }
            other => return Err(bad("reliability.kind", format!("unknown reliability `{other}`"))),
        })
    }

    fn rate(&self, r: &mut RateConfig) -> Result<(), LoadError> {
        if let Some(m) = self.str("rate.mode")? {
            r.mode = match m {
                "none" => RateMode::None,
                "fixed" => RateMode::Fixed,
                "tfrc" => RateMode::Tfrc,
                _ => return Err(bad("rate.mode", "expected none, fixed or tfrc")),
            };
        }
        set(&mut r.fixed_rate, self.f64("rate.fixed_rate")?);
        set(&mut r.segment_size, self.usize("rate.segment_size")?);
        set(&mut r.count_small_as_full, self.bool("rate.count_small_as_full")?);
        set(&mut r.bucket_depth, self.usize("rate.bucket_depth")?);
        set(&mut r.padding, self.bool("rate.padding")?);
        set(&mut r.max_queue, self.usize("rate.max_queue")?);
        set(&mut r.vp_packet_rate, self.f64("rate.vp_packet_rate")?);
        set(&mut r.vp_min_payload, self.usize("rate.vp_min_payload")?);
        Ok(())
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn flatten(prefix: &str, table: toml::Table, out: &mut BTreeMap<String, Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            v => {
                out.insert(key, v);
            }
        }
    }
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

pub fn parse_coupling(s: &str) -> Option<CouplingMode> {
    match s {
        "inline" => Some(CouplingMode::Inline),
        "outside" => Some(CouplingMode::Outside),
        "vp" => Some(CouplingMode::Vp),
        _ => None,
    }
}

/// Pulls `--dotted.key=value` and `--dotted.key value` pairs for known keys
/// out of an argument list, leaving everything else in place.
pub fn extract_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            rest.push(a);
            continue;
        };
        let (key, inline) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        // `--seed` is a regular flag of the run command.
        if key == "seed" || !KEYS.contains(&key.as_str()) {
            rest.push(a);
            continue;
        }
        match inline.or_else(|| it.next()) {
            Some(v) => overrides.push((key, v)),
            None => rest.push(a),
        }
    }
    (rest, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_base_scenario() {
        let s = Settings::parse("").unwrap();
        assert_eq!(s.build().unwrap(), scenario_foreman_proxy());
    }

    #[test]
    fn sections_and_overrides() {
        let mut s = Settings::parse(
            "duration = 5\n[reliability]\nkind = \"block\"\nk = 4\nn = 6\n[channel.forward]\nmodel = \"gilbert_elliott\"\n",
        )
        .unwrap();
        s.set("channel.forward.p_bg", "0.25").unwrap();
        let sc = s.build().unwrap();
        assert_eq!(sc.duration, 5.0);
        assert_eq!(sc.reliability, Reliability::Block(BlockCodeConfig { k: 4, n: 6 }));
        assert_eq!(
            sc.channel_forward.model,
            LossModel::GilbertElliott {
                p_gb: 0.01,
                p_bg: 0.25,
                loss_good: 0.0,
                loss_bad: 1.0
            }
        );
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        assert!(matches!(Settings::parse("rho = 0.1"), Err(LoadError::UnknownKey(_))));
        let s = Settings::parse("[reliability]\nrho = \"high\"").unwrap();
        assert!(matches!(s.build(), Err(LoadError::BadValue { .. })));
        assert!(Settings::default().set("nope", "1").is_err());
    }

    #[test]
    fn override_extraction() {
        let args = ["run", "a.toml", "--reliability.rho=0.2", "--seed", "4", "--rate.mode", "tfrc", "--out", "x"];
        let (rest, ov) = extract_overrides(args.iter().map(|s| s.to_string()).collect());
        assert_eq!(rest, ["run", "a.toml", "--seed", "4", "--out", "x"]);
        assert_eq!(
            ov,
            [
                ("reliability.rho".to_string(), "0.2".to_string()),
                ("rate.mode".to_string(), "tfrc".to_string())
            ]
        );
    }

    #[test]
    fn bare_strings_from_the_command_line() {
        let mut s = Settings::default();
        s.set("coupling", "outside").unwrap();
        s.set("rate.padding", "true").unwrap();
        let sc = s.build().unwrap();
        assert_eq!(sc.coupling, CouplingMode::Outside);
        assert!(sc.rate.padding);
    }
}
