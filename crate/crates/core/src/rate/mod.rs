//! Equation-based congestion control.
//!
//! [`tfrc`] follows RFC 5348: loss intervals averaged with the fixed weight
//! profile, the TCP throughput equation with `b = 1` and `t_RTO = 4 * R`,
//! and a 2x receive-rate cap. Oscillation reduction and idle-period rules
//! are left out. [`vp`] keeps the packet rate fixed and moves the packet
//! size instead.

pub mod tfrc;
pub mod vp;

pub use tfrc::{loss_event_rate, tfrc_rate, FeedbackReport, LossHistory, RateSample, RateState};
pub use vp::{vp_packet_size, VpRateState, VpSize};
