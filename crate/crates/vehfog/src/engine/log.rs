//! Run output: per-(message, receiver) outcomes and per-transmission frames.

use std::fmt;

use super::delay::{HopDelay, Nanos};
use crate::mobility::VehicleId;

/// Message identifier, assigned in schedule order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MsgId(pub u32);

impl fmt::Display for MsgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A transmitting or receiving entity: a vehicle or a fog node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Vehicle(VehicleId),
    Fog(u32),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Vehicle(id) => write!(f, "v{id}"),
            NodeId::Fog(id) => write!(f, "f{id}"),
        }
    }
}

/// Terminal outcome of one (message, intended receiver) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// First successful reception, absolute time.
    Delivered { at_ns: Nanos },
    /// Every viable copy was lost to frame collisions.
    Collided,
    /// Blocked by buildings with no fog route around them.
    DroppedShadow,
    /// No power-feasible or in-range route existed.
    OutOfRange,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Delivered { .. } => "delivered",
            Outcome::Collided => "collided",
            Outcome::DroppedShadow => "dropped_shadow",
            Outcome::OutOfRange => "out_of_range",
        }
    }

    pub fn is_delivered(&self) -> bool {
        matches!(self, Outcome::Delivered { .. })
    }
}

/// One (message, intended receiver) record. `hops` is populated only for
/// deliveries and lists the per-hop delay decomposition along the path.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRecord {
    pub msg: MsgId,
    pub receiver: VehicleId,
    pub outcome: Outcome,
    pub hops: Vec<HopDelay>,
}

impl OutcomeRecord {
    pub fn delay_ns(&self) -> Option<Nanos> {
        self.outcome
            .is_delivered()
            .then(|| self.hops.iter().map(|h| h.total_ns).sum())
    }
}

/// One physical transmission of a critical-message frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub id: u64,
    pub msg: MsgId,
    pub sender: NodeId,
    pub attempt: u32,
    pub start_ns: Nanos,
    pub end_ns: Nanos,
    pub n_intended: u32,
    /// True when at least one addressed receiver lost this frame to a
    /// collision.
    pub collided: bool,
}

/// Complete record of one simulation run.
///
/// `outcomes` holds exactly one terminal record per (message, intended
/// receiver) pair: deliveries in chronological order, then undelivered pairs
/// in (message, receiver) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub outcomes: Vec<OutcomeRecord>,
    pub frames: Vec<FrameRecord>,
    /// Messages whose sender had no vehicle in transmission range.
    pub no_neighbor_msgs: Vec<MsgId>,
}

/// Formats nanoseconds as a fixed-point seconds string ("1.024000000"),
/// byte-stable across runs.
pub fn format_secs(ns: Nanos) -> String {
    format!("{}.{:09}", ns / 1_000_000_000, ns % 1_000_000_000)
}

impl EventLog {
    /// Outcome CSV: `msg_id,receiver,outcome,t_delivered,hops,delay_total`.
    pub fn outcomes_csv(&self) -> String {
        let mut out = String::from("msg_id,receiver,outcome,t_delivered,hops,delay_total\n");
        for r in &self.outcomes {
            match r.outcome {
                Outcome::Delivered { at_ns } => {
                    let delay = r.delay_ns().unwrap_or(0);
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        r.msg,
                        r.receiver,
                        r.outcome.label(),
                        format_secs(at_ns),
                        r.hops.len(),
                        format_secs(delay)
                    ));
                }
                _ => {
                    out.push_str(&format!("{},{},{},,0,\n", r.msg, r.receiver, r.outcome.label()));
                }
            }
        }
        out
    }

    /// Per-hop detail CSV for delivered pairs:
    /// `msg_id,receiver,hop,sender_kind,t_trans,t_q,t_cont,t_proc,t_prop,total`.
    pub fn hops_csv(&self) -> String {
        let mut out =
            String::from("msg_id,receiver,hop,t_trans,t_q,t_cont,t_proc,t_prop,total\n");
        for r in &self.outcomes {
            if !r.outcome.is_delivered() {
                continue;
            }
            for (i, h) in r.hops.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.msg,
                    r.receiver,
                    i + 1,
                    format_secs(h.trans_ns),
                    format_secs(h.queue_ns),
                    format_secs(h.cont_ns),
                    format_secs(h.proc_ns),
                    format_secs(h.prop_ns),
                    format_secs(h.total_ns)
                ));
            }
        }
        out
    }

    /// Frame CSV:
    /// `frame_id,msg_id,sender,attempt,t_start,t_end,n_intended,collided`.
    pub fn frames_csv(&self) -> String {
        let mut out =
            String::from("frame_id,msg_id,sender,attempt,t_start,t_end,n_intended,collided\n");
        for f in &self.frames {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                f.id,
                f.msg,
                f.sender,
                f.attempt,
                format_secs(f.start_ns),
                format_secs(f.end_ns),
                f.n_intended,
                f.collided as u8
            ));
        }
        out
    }

    /// All three CSV sections concatenated; used for byte-identity checks.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = self.outcomes_csv().into_bytes();
        buf.extend_from_slice(self.hops_csv().as_bytes());
        buf.extend_from_slice(self.frames_csv().as_bytes());
        buf
    }

    pub fn intended_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn delivered_count(&self) -> usize {
        self.outcomes.iter().filter(|r| r.outcome.is_delivered()).count()
    }
}
