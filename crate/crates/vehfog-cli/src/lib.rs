//! Library surface of the simulator CLI: configuration parsing and the
//! command implementations, kept callable for integration tests.

pub mod commands;
pub mod config;
