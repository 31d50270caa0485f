//! Parameter sweeps: every axis value times every replicate, run in
//! parallel, returned in (value, replicate) order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use fecsim_core::metrics::{compute_metrics, MetricsError};
use fecsim_core::netsim::{run, SimulationTrace};
use fecsim_core::scenario::*;
use thiserror::Error;

use crate::config::parse_coupling;
use crate::report::SummaryRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Sets the nominal loss rate and an i.i.d. forward channel with that
    /// loss probability.
    Plr,
    /// Both directions.
    OneWayDelay,
    Rho,
    Coupling,
    /// `none`, `sliding`, `block` (7 of 8 unless the base is already a
    /// block code) or `arq`.
    Reliability,
    IFrameByteShare,
}

pub const AXES: [(&str, Axis); 6] = [
    ("plr", Axis::Plr),
    ("one_way_delay", Axis::OneWayDelay),
    ("rho", Axis::Rho),
    ("coupling", Axis::Coupling),
    ("reliability", Axis::Reliability),
    ("i_frame_byte_share", Axis::IFrameByteShare),
];

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("unknown axis `{0}` (expected one of plr, one_way_delay, rho, coupling, reliability, i_frame_byte_share)")]
    UnknownAxis(String),
    #[error("axis {axis}: bad value `{value}`: {msg}")]
    BadValue { axis: &'static str, value: String, msg: String },
    #[error("axis value {value}, rep {rep}: {source}")]
    Metrics {
        value: String,
        rep: u64,
        source: MetricsError,
    },
}

impl Axis {
    pub fn parse(s: &str) -> Result<Axis, SweepError> {
        AXES.iter()
            .find(|(n, _)| *n == s)
            .map(|(_, a)| *a)
            .ok_or_else(|| SweepError::UnknownAxis(s.to_string()))
    }

    pub fn name(self) -> &'static str {
        AXES.iter().find(|(_, a)| *a == self).map(|(n, _)| *n).unwrap_or("?")
    }

    /// The base scenario with this axis set to `value`, validated.
    pub fn apply(self, base: &ScenarioConfig, value: &str) -> Result<ScenarioConfig, SweepError> {
        let err = |msg: &str| SweepError::BadValue {
            axis: self.name(),
            value: value.to_string(),
            msg: msg.to_string(),
        };
        let num = || value.trim().parse::<f64>().map_err(|_| err("not a number"));
        let mut s = base.clone();
        match self {
            Axis::Plr => {
                let p = num()?;
                s.plr = p;
                s.channel_forward.model = LossModel::Bernoulli { p };
            }
            Axis::OneWayDelay => {
                let d = num()?;
                s.channel_forward.one_way_delay = d;
                s.channel_reverse.one_way_delay = d;
            }
            Axis::Rho => match &mut s.reliability {
                Reliability::Sliding(c) => c.rho = num()?,
                _ => return Err(err("the base scenario does not use the sliding codec")),
            },
            Axis::Coupling => s.coupling = parse_coupling(value.trim()).ok_or_else(|| err("expected inline, outside or vp"))?,
            Axis::Reliability => {
                s.reliability = match value.trim() {
                    "none" => Reliability::None,
                    "arq" => Reliability::Arq,
                    "sliding" => match &base.reliability {
                        Reliability::Sliding(c) => Reliability::Sliding(c.clone()),
                        _ => Reliability::Sliding(SlidingConfig::default()),
                    },
                    "block" => match &base.reliability {
                        Reliability::Block(c) => Reliability::Block(*c),
                        _ => Reliability::Block(fecsim_core::baselines::BlockCodeConfig { k: 7, n: 8 }),
                    },
                    _ => return Err(err("expected none, sliding, block or arq")),
                }
            }
            Axis::IFrameByteShare => match &mut s.traffic {
                TrafficConfig::Vbr { i_frame_byte_share, .. } => *i_frame_byte_share = num()?,
                _ => return Err(err("the base scenario does not use vbr traffic")),
            },
        }
        s.validate().map_err(|e| err(&e.to_string()))?;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub axis: Axis,
    pub values: Vec<String>,
    pub reps: u64,
    /// Replicate `i` runs with seeds derived from `base_seed + i`.
    pub base_seed: u64,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SummaryRow>,
    /// Points whose simulation ended early; their rows summarize the
    /// partial trace.
    pub truncated: Vec<(String, u64)>,
}

/// Runs one point per (value, rep). Rows are ordered by value position, then
/// rep, whatever the completion order.
pub fn sweep(base: &ScenarioConfig, plan: &SweepPlan) -> Result<SweepResult, SweepError> {
    let points: Vec<(usize, u64, ScenarioConfig)> = plan
        .values
        .iter()
        .enumerate()
        .map(|(vi, v)| {
            let s = plan.axis.apply(base, v)?;
            Ok((0..plan.reps).map(move |rep| (vi, rep, s.clone().with_seed(plan.base_seed.wrapping_add(rep)))))
        })
        .collect::<Result<Vec<_>, SweepError>>()?
        .into_iter()
        .flatten()
        .collect();
    let traces = run_all(points.iter().map(|(_, _, s)| s).collect(), plan.jobs);
    let mut rows = Vec::with_capacity(points.len());
    let mut truncated = Vec::new();
    for ((vi, rep, s), trace) in points.iter().zip(traces) {
        let value = plan.values[*vi].trim().to_string();
        if trace.is_truncated() {
            truncated.push((value.clone(), *rep));
        }
        let metrics = compute_metrics(&trace, s.deadline, true).map_err(|source| SweepError::Metrics {
            value: value.clone(),
            rep: *rep,
            source,
        })?;
        rows.push(SummaryRow {
            axis_value: value,
            rep: *rep,
            metrics,
        });
    }
    Ok(SweepResult { rows, truncated })
}

/// Runs independent simulations on up to `jobs` threads; output order
/// matches input order.
pub fn run_all(scenarios: Vec<&ScenarioConfig>, jobs: usize) -> Vec<SimulationTrace> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<SimulationTrace>>> = scenarios.iter().map(|_| Mutex::new(None)).collect();
    let workers = jobs.max(1).min(scenarios.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(s) = scenarios.get(i) else { break };
                let t = run(s);
                *slots[i].lock().unwrap() = Some(t);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every point ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_names_round_trip() {
        for (n, a) in AXES {
            assert_eq!(Axis::parse(n).unwrap(), a);
            assert_eq!(a.name(), n);
        }
        assert!(Axis::parse("bandwidth").is_err());
    }

    #[test]
    fn apply_rejects_mismatched_bases() {
        let base = scenario_foreman_unprotected();
        assert!(Axis::Rho.apply(&base, "0.2").is_err());
        assert!(Axis::Plr.apply(&base, "lots").is_err());
        let s = Axis::Reliability.apply(&base, "block").unwrap();
        assert_eq!(s.reliability.name(), "block");
    }

    #[test]
    fn empty_values_give_no_rows() {
        let plan = SweepPlan {
            axis: Axis::Plr,
            values: vec![],
            reps: 3,
            base_seed: 1,
            jobs: 2,
        };
        assert!(sweep(&scenario_foreman_proxy(), &plan).unwrap().rows.is_empty());
    }
}
