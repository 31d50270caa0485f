//! Deterministic discrete-event simulator.
//!
//! One run wires traffic into the sender queue, through the rate gate and
//! the reliability layer, across a lossy forward channel to the receiver,
//! and carries acknowledgements and rate feedback back on a separate
//! reverse channel. Everything is driven by one event queue; identical
//! scenarios produce identical traces.

mod channel;
mod event;
mod receiver;
mod sender;
mod sim;
mod trace;

pub use channel::{Channel, ChannelOutcome};
pub use event::{Event, EventQueue};
pub use receiver::{AckTracker, Delivery, LossTracker, Receiver, RxOutcome};
pub use sender::{CodecHooks, Fragment, Gate, Outgoing, QueueConfig, SenderQueue, TickResult, TokenBucket};
pub use sim::{payload_bytes, run};
pub use trace::{Direction, Failure, FailureKind, PacketClass, SimulationTrace, Stage, TraceKind, TraceRecord};
