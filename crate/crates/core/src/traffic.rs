//! Application traffic: a two-level GoP video model, CBR, and trace replay.

use alloc::vec::Vec;

use thiserror::Error;

use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrafficError {
    #[error("invalid video config: {0}")]
    Config(&'static str),
    #[error("trace row {row}: {msg}")]
    Trace { row: usize, msg: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    I,
    P,
}

impl FrameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameKind::I => "I",
            FrameKind::P => "P",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameEvent {
    pub frame_index: u64,
    pub kind: FrameKind,
    pub size: usize,
    pub due_at: SimTime,
    /// Fragment payload sizes; all but the last equal `max_payload`.
    pub packets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VbrVideoConfig {
    /// bits/s
    pub bitrate: f64,
    pub frame_rate: f64,
    pub gop_size: u32,
    /// Share of the GoP's bytes carried by the I-frame. Ignored when
    /// `gop_size == 1`.
    pub i_frame_byte_share: f64,
    pub max_payload: usize,
    pub duration_frames: u64,
}

impl Default for VbrVideoConfig {
    fn default() -> Self {
        VbrVideoConfig {
            bitrate: 441_370.0,
            frame_rate: 30.0,
            gop_size: 30,
            i_frame_byte_share: 0.25,
            max_payload: 500,
            duration_frames: 300,
        }
    }
}

impl VbrVideoConfig {
    pub fn validate(&self) -> Result<(), TrafficError> {
        if !(self.bitrate > 0.0) {
            return Err(TrafficError::Config("bitrate must be positive"));
        }
        if !(self.frame_rate > 0.0) {
            return Err(TrafficError::Config("frame_rate must be positive"));
        }
        if self.gop_size == 0 {
            return Err(TrafficError::Config("gop_size must be at least 1"));
        }
        if self.max_payload == 0 {
            return Err(TrafficError::Config("max_payload must be positive"));
        }
        if self.gop_size > 1 {
            let lo = 1.0 / self.gop_size as f64;
            if !(self.i_frame_byte_share > lo && self.i_frame_byte_share < 1.0) {
                return Err(TrafficError::Config("i_frame_byte_share must lie in (1/gop_size, 1)"));
            }
        }
        Ok(())
    }

    pub fn gop_bytes(&self) -> f64 {
        self.bitrate * self.gop_size as f64 / self.frame_rate / 8.0
    }

    /// Frame sizes for one GoP; they sum to `round(gop_bytes)`.
    pub fn gop_frame_sizes(&self) -> Vec<usize> {
        let total = libm::round(self.gop_bytes()) as usize;
        let g = self.gop_size as usize;
        if g == 1 {
            return alloc::vec![total];
        }
        let i_size = (libm::round(self.i_frame_byte_share * total as f64) as usize).min(total);
        let p_total = total - i_size;
        let p = g - 1;
        let mut sizes = Vec::with_capacity(g);
        sizes.push(i_size);
        sizes.extend((0..p).map(|j| p_total * (j + 1) / p - p_total * j / p));
        sizes
    }
}

pub fn fragment(size: usize, max_payload: usize) -> Vec<usize> {
    let mut out = alloc::vec![max_payload; size / max_payload];
    if !size.is_multiple_of(max_payload) {
        out.push(size % max_payload);
    }
    out
}

/// Deterministic GoP schedule: frame `f` is due at `f / frame_rate`.
pub fn generate_frames(config: &VbrVideoConfig) -> Result<Vec<FrameEvent>, TrafficError> {
    config.validate()?;
    let sizes = config.gop_frame_sizes();
    let g = config.gop_size as u64;
    Ok((0..config.duration_frames)
        .map(|f| {
            let size = sizes[(f % g) as usize];
            FrameEvent {
                frame_index: f,
                kind: if f % g == 0 { FrameKind::I } else { FrameKind::P },
                size,
                due_at: SimTime::from_secs_f64(f as f64 / config.frame_rate),
                packets: fragment(size, config.max_payload),
            }
        })
        .collect())
}

/// Evenly spaced single-packet "frames" at `bitrate / (8 * packet_size)`
/// packets per second.
pub fn cbr_frames(bitrate: f64, packet_size: usize, duration: f64) -> Vec<FrameEvent> {
    if !(bitrate > 0.0) || packet_size == 0 || !(duration > 0.0) {
        return Vec::new();
    }
    let rate = bitrate / (8.0 * packet_size as f64);
    let count = libm::ceil(duration * rate - 1e-9).max(0.0) as u64;
    (0..count)
        .map(|i| FrameEvent {
            frame_index: i,
            kind: FrameKind::I,
            size: packet_size,
            due_at: SimTime::from_secs_f64(i as f64 / rate),
            packets: alloc::vec![packet_size],
        })
        .collect()
}

/// One row of a frame-size trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceFrame {
    pub frame_index: u64,
    pub kind: FrameKind,
    pub size: usize,
}

/// Replays recorded frame sizes at a fixed frame rate. Rows must be in
/// frame order starting at 0 with no gaps.
pub fn frames_from_trace(rows: &[TraceFrame], frame_rate: f64, max_payload: usize) -> Result<Vec<FrameEvent>, TrafficError> {
    if !(frame_rate > 0.0) || max_payload == 0 {
        return Err(TrafficError::Config("trace replay needs positive frame_rate and max_payload"));
    }
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            if r.frame_index != i as u64 {
                return Err(TrafficError::Trace {
                    row: i,
                    msg: "frame_index out of sequence",
                });
            }
            Ok(FrameEvent {
                frame_index: r.frame_index,
                kind: r.kind,
                size: r.size,
                due_at: SimTime::from_secs_f64(i as f64 / frame_rate),
                packets: fragment(r.size, max_payload),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overhead {
    pub fraction: f64,
    /// The inputs violated `rate_hi > rate_lo > 0`; `fraction` is clamped.
    pub warning: bool,
}

/// Extra bit rate of `rate_hi` relative to itself: `(hi - lo) / hi`.
pub fn redundancy_overhead(rate_hi: f64, rate_lo: f64) -> Overhead {
    if !(rate_lo > 0.0) || !(rate_hi > rate_lo) {
        let fraction = if rate_hi > 0.0 {
            ((rate_hi - rate_lo) / rate_hi).clamp(0.0, 1.0)
        } else {
            0.0
        };
        return Overhead {
            fraction,
            warning: true,
        };
    }
    Overhead {
        fraction: (rate_hi - rate_lo) / rate_hi,
        warning: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gop_bytes_for_reference_encoding() {
        let cfg = VbrVideoConfig::default();
        assert!((cfg.gop_bytes() - 55_171.25).abs() < 1e-9);
        let frames = generate_frames(&cfg).unwrap();
        let gop: usize = frames[..30].iter().map(|f| f.size).sum();
        assert_eq!(gop, 55_171);
    }

    #[test]
    fn frame_kinds_and_fragments() {
        let cfg = VbrVideoConfig::default();
        let frames = generate_frames(&cfg).unwrap();
        assert_eq!(frames.len(), 300);
        for f in &frames {
            assert_eq!(f.kind == FrameKind::I, f.frame_index % 30 == 0);
            assert_eq!(f.packets.iter().sum::<usize>(), f.size);
            let (last, rest) = f.packets.split_last().unwrap();
            assert!(rest.iter().all(|&p| p == cfg.max_payload));
            assert!(*last <= cfg.max_payload);
        }
        assert_eq!(frames[31].due_at, SimTime::from_secs_f64(31.0 / 30.0));
    }

    #[test]
    fn i_frame_to_p_frame_ratio() {
        let cfg = VbrVideoConfig::default();
        let frames = generate_frames(&cfg).unwrap();
        let p_mean = frames[1..30].iter().map(|f| f.size as f64).sum::<f64>() / 29.0;
        let ratio = frames[0].size as f64 / p_mean;
        // 0.25 / (0.75 / 29)
        assert!((ratio - 9.6667).abs() < 0.01, "{ratio}");
    }

    #[test]
    fn gop_of_one_is_all_i_frames() {
        let cfg = VbrVideoConfig {
            gop_size: 1,
            duration_frames: 10,
            ..VbrVideoConfig::default()
        };
        let frames = generate_frames(&cfg).unwrap();
        assert!(frames.iter().all(|f| f.kind == FrameKind::I && f.size == frames[0].size));
    }

    #[test]
    fn invalid_share_rejected() {
        for share in [0.01, 1.0, 0.0] {
            let cfg = VbrVideoConfig {
                i_frame_byte_share: share,
                ..VbrVideoConfig::default()
            };
            assert!(generate_frames(&cfg).is_err());
        }
    }

    #[test]
    fn burstiness_witness() {
        let cfg = VbrVideoConfig::default();
        let frames = generate_frames(&cfg).unwrap();
        let mean_rate = cfg.bitrate / 8.0;
        let i_rate = frames[0].size as f64 * cfg.frame_rate;
        assert!(i_rate / mean_rate >= 5.0);
    }

    #[test]
    fn cbr_spacing() {
        let frames = cbr_frames(531_130.0, 1500, 10.0);
        let rate: f64 = 531_130.0 / 12_000.0;
        assert!((rate - 44.26).abs() < 0.01);
        assert_eq!(frames.len(), 443);
        let gap = frames[1].due_at.as_secs_f64() - frames[0].due_at.as_secs_f64();
        assert!((gap - 1.0 / rate).abs() < 1e-9);
        assert!(cbr_frames(531_130.0, 1500, 0.0).is_empty());
        let double = cbr_frames(531_130.0, 3000, 10.0);
        assert_eq!(double.len(), 222);
    }

    #[test]
    fn overhead_examples() {
        let o = redundancy_overhead(531_130.0, 441_370.0);
        assert!((o.fraction - 0.169).abs() < 0.001 && !o.warning);
        assert_eq!(redundancy_overhead(1000.0, 500.0).fraction, 0.5);
        let same = redundancy_overhead(1000.0, 1000.0);
        assert_eq!(same.fraction, 0.0);
        assert!(same.warning);
    }

    #[test]
    fn trace_replay() {
        let rows = [
            TraceFrame {
                frame_index: 0,
                kind: FrameKind::I,
                size: 1200,
            },
            TraceFrame {
                frame_index: 1,
                kind: FrameKind::P,
                size: 300,
            },
        ];
        let frames = frames_from_trace(&rows, 25.0, 500).unwrap();
        assert_eq!(frames[0].packets, alloc::vec![500, 500, 200]);
        assert_eq!(frames[1].due_at, SimTime::from_millis(40));
        let bad = [rows[1]];
        assert!(frames_from_trace(&bad, 25.0, 500).is_err());
    }
}
