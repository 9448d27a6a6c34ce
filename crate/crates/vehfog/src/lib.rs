//! Deterministic discrete-event simulator for critical-message dissemination
//! in vehicular networks with obstacle shadowing.
//!
//! The crate is organized around the pipeline of a single simulation run:
//!
//! * [`geometry`] — obstacle maps and exact line-of-sight obstruction,
//! * [`radio`] — link-budget math and shadowed/non-shadowed receiver
//!   classification,
//! * [`mobility`] — vehicle traces (synthetic generator + CSV import) and
//!   neighbor scans,
//! * [`protocols`] — the hybrid fog/multi-hop dissemination scheme and the
//!   four baseline protocols, expressed as routing plans,
//! * [`engine`] — the event queue that executes plans under CSMA/CA
//!   contention and produces an [`engine::EventLog`],
//! * [`metrics`] — delivery probability, end-to-end delay, collision ratio
//!   and the success-rate score computed from a log,
//! * [`scenario`] — the full run configuration consumed by
//!   [`engine::run_simulation`].
//!
//! Every run is a pure function of its [`scenario::Scenario`] (including the
//! seed): event order is total, time is integer nanoseconds, and logs
//! serialize to byte-identical CSV across executions.

pub mod engine;
pub mod geometry;
pub mod metrics;
pub mod mobility;
pub mod protocols;
pub mod radio;
pub mod scenario;
