//! Full run configuration.

use thiserror::Error;

use crate::geometry::ObstacleMap;
use crate::mobility::{VehicleId, VehicleTrace};
use crate::protocols::{DecisionRule, FogNode, ProtocolKind};
use crate::radio::{AttenuationParams, LinkBudget};

/// MAC-layer knobs of the broadcast CSMA/CA model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacParams {
    /// Channel data rate, bit/s.
    pub data_rate_bps: f64,
    /// Backoff slot time, seconds.
    pub slot_time_s: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    /// Total transmission attempts per frame (first try plus retries).
    pub max_attempts: u32,
    /// Relay processing time per forwarding vehicle, seconds.
    pub relay_proc_s: f64,
    /// When false, overlapping frames never destroy each other; power and
    /// range limits still apply.
    pub collisions: bool,
    /// Periodic background beacon rate per vehicle, Hz; zero disables.
    pub beacon_rate_hz: f64,
    pub beacon_size_bytes: u64,
}

impl Default for MacParams {
    fn default() -> Self {
        MacParams {
            data_rate_bps: 2e6,
            slot_time_s: 13e-6,
            cw_min: 31,
            cw_max: 1023,
            max_attempts: 3,
            relay_proc_s: 1e-4,
            collisions: true,
            beacon_rate_hz: 0.0,
            beacon_size_bytes: 300,
        }
    }
}

/// One scheduled critical message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MessageSpec {
    pub sender: VehicleId,
    pub time_s: f64,
    pub size_bytes: u64,
}

/// Everything one run needs. Runs sharing a scenario and seed produce
/// byte-identical logs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub map: ObstacleMap,
    pub trace: VehicleTrace,
    pub link: LinkBudget,
    pub atten: AttenuationParams,
    pub range_m: f64,
    pub mac: MacParams,
    pub protocol: ProtocolKind,
    pub rule: DecisionRule,
    pub fog: Vec<FogNode>,
    /// Cloud round-trip latency for the cloud baseline, seconds.
    pub cloud_rtt_s: f64,
    /// Rebroadcast jitter upper bound for flooding, seconds.
    pub flood_jitter_s: f64,
    /// Delay deadline normalizing the success-rate score, seconds.
    pub dmax_s: f64,
    pub messages: Vec<MessageSpec>,
    pub seed: u64,
    /// Hard stop for background traffic scheduling, seconds.
    pub duration_s: f64,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("no messages scheduled")]
    NoMessages,
    #[error("message sender {sender} is not part of the trace")]
    UnknownSender { sender: VehicleId },
    #[error("message at t={time_s} s is outside the run duration {duration_s} s")]
    MessageOutsideRun { time_s: f64, duration_s: f64 },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("vehicle {id} at ({x}, {y}) lies outside the map bounds")]
    TraceOutsideMap { id: VehicleId, x: f64, y: f64 },
    #[error("protocol {0} requires at least one fog node")]
    MissingFog(ProtocolKind),
    #[error("invalid parameter {name}: {reason}")]
    BadParam { name: &'static str, reason: String },
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let positive = |name: &'static str, v: f64| -> Result<(), ScenarioError> {
            if v > 0.0 {
                Ok(())
            } else {
                Err(ScenarioError::BadParam { name, reason: format!("must be positive, got {v}") })
            }
        };
        positive("radio.range_m", self.range_m)?;
        positive("mac.data_rate_bps", self.mac.data_rate_bps)?;
        positive("mac.slot_time_s", self.mac.slot_time_s)?;
        positive("duration_s", self.duration_s)?;
        if self.mac.cw_min > self.mac.cw_max {
            return Err(ScenarioError::BadParam {
                name: "mac.cw_min",
                reason: format!("cw_min {} exceeds cw_max {}", self.mac.cw_min, self.mac.cw_max),
            });
        }
        if self.mac.max_attempts == 0 {
            return Err(ScenarioError::BadParam {
                name: "mac.max_attempts",
                reason: "at least one attempt is required".into(),
            });
        }
        if self.dmax_s <= 0.0 {
            return Err(ScenarioError::BadParam {
                name: "dmax_ms",
                reason: "deadline must be positive".into(),
            });
        }
        if self.flood_jitter_s < 0.0 {
            return Err(ScenarioError::BadParam {
                name: "flood.jitter_ms",
                reason: "jitter cannot be negative".into(),
            });
        }
        if self.cloud_rtt_s < 0.0 {
            return Err(ScenarioError::BadParam {
                name: "cloud.rtt_ms",
                reason: "round trip cannot be negative".into(),
            });
        }
        if self.trace.snapshots.is_empty() {
            return Err(ScenarioError::EmptyTrace);
        }
        for snap in &self.trace.snapshots {
            for s in &snap.states {
                if !self.map.contains(s.pos) {
                    return Err(ScenarioError::TraceOutsideMap {
                        id: s.id,
                        x: s.pos.x,
                        y: s.pos.y,
                    });
                }
            }
        }
        if self.messages.is_empty() {
            return Err(ScenarioError::NoMessages);
        }
        let ids = self.trace.vehicle_ids();
        for m in &self.messages {
            if !ids.contains(&m.sender) {
                return Err(ScenarioError::UnknownSender { sender: m.sender });
            }
            if m.time_s < 0.0 || m.time_s > self.duration_s {
                return Err(ScenarioError::MessageOutsideRun {
                    time_s: m.time_s,
                    duration_s: self.duration_s,
                });
            }
            if m.size_bytes == 0 {
                return Err(ScenarioError::BadParam {
                    name: "msg.size_bytes",
                    reason: "message size must be positive".into(),
                });
            }
        }
        if self.protocol.needs_fog() && self.fog.is_empty() {
            return Err(ScenarioError::MissingFog(self.protocol));
        }
        for f in &self.fog {
            if !(f.coverage_m > 0.0) {
                return Err(ScenarioError::BadParam {
                    name: "fog.coverage_m",
                    reason: format!("fog node {} has non-positive coverage", f.id),
                });
            }
        }
        Ok(())
    }
}

/// Fog nodes at regular intervals along the road: x = spacing/2, 3*spacing/2,
/// ... up to `road_length_m`, all at height `y_m`.
pub fn fog_grid(
    road_length_m: f64,
    spacing_m: f64,
    y_m: f64,
    coverage_m: f64,
    proc_s: f64,
) -> Vec<FogNode> {
    let mut nodes = Vec::new();
    let mut x = spacing_m / 2.0;
    let mut id = 0;
    while x < road_length_m {
        nodes.push(FogNode {
            id,
            pos: crate::geometry::Point::new(x, y_m),
            coverage_m,
            proc_s,
        });
        id += 1;
        x += spacing_m;
    }
    nodes
}
