//! Per-hop delay components.
//!
//! A hop's delay is the sum of transmission, queuing, contention, processing
//! and propagation time. The engine keeps all five as integer nanoseconds so
//! end-to-end delays are exactly the sum of their parts.

use rand::Rng;
use thiserror::Error;

/// Simulation time and durations, nanoseconds.
pub type Nanos = u64;

/// Signal propagation speed used for `t_prop`, m/s.
pub const LIGHT_SPEED_MPS: f64 = 2.998e8;

#[derive(Debug, Error)]
pub enum DelayError {
    #[error("transmission delay requires positive size and rate, got {size_bytes} B at {rate_bps} bit/s")]
    TransmissionDomain { size_bytes: u64, rate_bps: f64 },
}

pub fn secs_to_nanos(s: f64) -> Nanos {
    debug_assert!(s >= 0.0);
    (s * 1e9).round() as Nanos
}

pub fn nanos_to_secs(ns: Nanos) -> f64 {
    ns as f64 / 1e9
}

/// Air time of a frame: `size * 8 / rate` seconds.
pub fn transmission_delay(size_bytes: u64, rate_bps: f64) -> Result<f64, DelayError> {
    if size_bytes == 0 || !(rate_bps > 0.0) {
        return Err(DelayError::TransmissionDomain { size_bytes, rate_bps });
    }
    Ok(size_bytes as f64 * 8.0 / rate_bps)
}

/// Propagation time over `distance_m` meters, seconds.
pub fn propagation_delay(distance_m: f64) -> f64 {
    debug_assert!(distance_m >= 0.0);
    distance_m / LIGHT_SPEED_MPS
}

/// Number of backoff slots drawn for the given retry attempt: uniform in
/// `[0, min((cw_min + 1) * 2^attempt - 1, cw_max)]`.
pub fn backoff_slots<R: Rng>(attempt: u32, cw_min: u32, cw_max: u32, rng: &mut R) -> u32 {
    let doubled = (u64::from(cw_min) + 1) << attempt.min(20);
    let window = (doubled - 1).min(u64::from(cw_max)) as u32;
    rng.gen_range(0..=window)
}

/// Contention delay in seconds for the given retry attempt.
pub fn contention_delay<R: Rng>(
    attempt: u32,
    cw_min: u32,
    cw_max: u32,
    slot_time_s: f64,
    rng: &mut R,
) -> f64 {
    backoff_slots(attempt, cw_min, cw_max, rng) as f64 * slot_time_s
}

/// One hop's delay decomposition, nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopDelay {
    pub trans_ns: Nanos,
    pub queue_ns: Nanos,
    pub cont_ns: Nanos,
    pub proc_ns: Nanos,
    pub prop_ns: Nanos,
    pub total_ns: Nanos,
}

impl HopDelay {
    pub fn new(trans_ns: Nanos, queue_ns: Nanos, cont_ns: Nanos, proc_ns: Nanos, prop_ns: Nanos) -> Self {
        HopDelay {
            trans_ns,
            queue_ns,
            cont_ns,
            proc_ns,
            prop_ns,
            total_ns: trans_ns + queue_ns + cont_ns + proc_ns + prop_ns,
        }
    }

    pub fn total_secs(&self) -> f64 {
        nanos_to_secs(self.total_ns)
    }
}

/// Composes a hop delay from component durations in seconds.
pub fn hop_delay(trans_s: f64, queue_s: f64, cont_s: f64, proc_s: f64, prop_s: f64) -> HopDelay {
    HopDelay::new(
        secs_to_nanos(trans_s),
        secs_to_nanos(queue_s),
        secs_to_nanos(cont_s),
        secs_to_nanos(proc_s),
        secs_to_nanos(prop_s),
    )
}
