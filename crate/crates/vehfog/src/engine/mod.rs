//! Deterministic discrete-event core.
//!
//! Time is integer nanoseconds; events are processed in (time, sequence)
//! order, so a run is a pure function of the scenario and seed.

mod delay;
mod log;
mod sim;

pub use delay::{
    backoff_slots, contention_delay, hop_delay, nanos_to_secs, propagation_delay, secs_to_nanos,
    transmission_delay, DelayError, HopDelay, Nanos, LIGHT_SPEED_MPS,
};
pub use log::{format_secs, EventLog, FrameRecord, MsgId, NodeId, Outcome, OutcomeRecord};
pub use sim::{run_simulation, SimError};
