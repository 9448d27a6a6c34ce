//! Event-driven execution of routing plans.
//!
//! Broadcast CSMA/CA without RTS/CTS or acknowledgments: a node transmits one
//! frame at a time; the first attempt goes out as soon as the channel around
//! the sender is idle, deferrals and retries draw a backoff from an
//! escalating contention window. Receptions fail on insufficient power
//! (deterministic) or on time overlap with any other transmission audible at
//! the receiver. Collided frames are retried up to the configured attempt
//! cap; the retry addresses only the receivers still missing the frame.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::delay::{
    backoff_slots, propagation_delay, secs_to_nanos, transmission_delay, HopDelay, Nanos,
};
use super::log::{EventLog, FrameRecord, MsgId, NodeId, Outcome, OutcomeRecord};
use crate::geometry::Point;
use crate::mobility::VehicleId;
use crate::protocols::{
    plan_dissemination, DisseminationContext, PlanError, PlannedFailure, RoutePlan,
};
use crate::radio::link_feasible;
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("planning failed: {0}")]
    Plan(#[from] PlanError),
}

/// Runs one scenario to completion and returns its log.
///
/// Event order is total over (time, insertion sequence); identical scenarios
/// and seeds produce byte-identical log serializations.
pub fn run_simulation(sc: &Scenario) -> Result<EventLog, SimError> {
    sc.validate()?;
    let mut sim = Sim::new(sc);
    sim.prepare()?;
    sim.run();
    Ok(sim.finish())
}

#[derive(Debug)]
enum Ev {
    Emit { msg: usize },
    Enqueue { stash: usize, front: bool },
    TxStart { node: NodeId },
    TxEnd { node: NodeId },
    RxResolve { res: usize, rcpt: usize },
    BeaconTick { vehicle: VehicleId },
}

#[derive(Debug)]
struct QEntry {
    at: Nanos,
    seq: u64,
    ev: Ev,
}

impl PartialEq for QEntry {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl Eq for QEntry {}
impl PartialOrd for QEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on (time, sequence)
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

#[derive(Debug, Clone)]
struct Rcpt {
    node: NodeId,
    pos: Point,
    forwards: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Frame {
    /// Index into `msgs`; `None` marks a background beacon.
    msg: Option<usize>,
    sender: NodeId,
    sender_pos: Point,
    range_m: f64,
    elevated: bool,
    recipients: Vec<Rcpt>,
    attempt: u32,
    proc_ns: Nanos,
    /// Takeover time plus processing, where takeover is when the sending
    /// node took charge of the message (reception time at a relay, emission
    /// time at the origin).
    enqueue_ns: Nanos,
    first_head_ns: Option<Nanos>,
    prefix: Arc<Vec<HopDelay>>,
    trans_ns: Nanos,
}

#[derive(Debug, Default)]
struct NodeState {
    queue: VecDeque<Frame>,
    busy: bool,
}

#[derive(Debug, Clone, Copy)]
struct CommittedTx {
    start: Nanos,
    end: Nanos,
    pos: Point,
    range_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FailKind {
    Collision,
    Power { crossings: u32 },
}

#[derive(Debug)]
struct Resolution {
    frame: Frame,
    start: Nanos,
    end: Nanos,
    tx_idx: usize,
    frame_rec: usize,
    pending: usize,
    fails: Vec<(usize, FailKind)>,
}

/// Failure-cause candidates, strongest first: a collision implies a viable
/// route existed, shadowing implies walls, out-of-range is the rest.
const CAUSE_COLLIDED: u8 = 3;
const CAUSE_SHADOW: u8 = 2;
const CAUSE_RANGE: u8 = 1;

#[derive(Debug)]
struct MsgRt {
    id: MsgId,
    origin: VehicleId,
    intended: Vec<VehicleId>,
    plan: RoutePlan,
    snapshot: usize,
    size_bytes: u64,
    /// Nodes that have decoded the message (first reception wins).
    delivered: BTreeSet<NodeId>,
    /// Intended receivers with a recorded delivery.
    recorded: BTreeSet<VehicleId>,
    fail_cause: BTreeMap<VehicleId, u8>,
}

struct Sim<'a> {
    sc: &'a Scenario,
    rng: ChaCha8Rng,
    now: Nanos,
    seq: u64,
    queue: BinaryHeap<QEntry>,
    nodes: BTreeMap<NodeId, NodeState>,
    stash: Vec<Option<Frame>>,
    committed: Vec<CommittedTx>,
    max_tx_dur: Nanos,
    prop_slack: Nanos,
    resolutions: Vec<Option<Resolution>>,
    msgs: Vec<MsgRt>,
    outcomes: Vec<OutcomeRecord>,
    frames: Vec<FrameRecord>,
    no_neighbor: Vec<MsgId>,
    duration_ns: Nanos,
    slot_ns: Nanos,
    flood_jitter_ns: Nanos,
}

impl<'a> Sim<'a> {
    fn new(sc: &'a Scenario) -> Self {
        let bounds = sc.map.bounds();
        let diag = Point::new(bounds.x_min, bounds.y_min)
            .distance(Point::new(bounds.x_max, bounds.y_max));
        Sim {
            sc,
            rng: ChaCha8Rng::seed_from_u64(sc.seed),
            now: 0,
            seq: 0,
            queue: BinaryHeap::new(),
            nodes: BTreeMap::new(),
            stash: Vec::new(),
            committed: Vec::new(),
            max_tx_dur: 0,
            prop_slack: secs_to_nanos(propagation_delay(diag)) + 1,
            resolutions: Vec::new(),
            msgs: Vec::new(),
            outcomes: Vec::new(),
            frames: Vec::new(),
            no_neighbor: Vec::new(),
            duration_ns: secs_to_nanos(sc.duration_s),
            slot_ns: secs_to_nanos(sc.mac.slot_time_s),
            flood_jitter_ns: secs_to_nanos(sc.flood_jitter_s),
        }
    }

    fn schedule(&mut self, at: Nanos, ev: Ev) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(QEntry { at, seq, ev });
    }

    /// Plans every scheduled message against its emission-time snapshot and
    /// queues the emission and beacon events.
    fn prepare(&mut self) -> Result<(), SimError> {
        let sc = self.sc;
        let d_norm_hint = {
            let trans = transmission_delay(
                sc.messages.first().map(|m| m.size_bytes).unwrap_or(256),
                sc.mac.data_rate_bps,
            )
            .expect("validated message size and rate");
            let cont = sc.mac.cw_min as f64 / 2.0 * sc.mac.slot_time_s;
            ((trans + cont + propagation_delay(sc.range_m)) / sc.dmax_s).clamp(0.0, 1.0)
        };
        for (i, spec) in sc.messages.iter().enumerate() {
            let snapshot = sc
                .trace
                .snapshots
                .iter()
                .rposition(|s| s.time_s <= spec.time_s)
                .unwrap_or(0);
            let states = &sc.trace.snapshots[snapshot].states;
            let ctx = DisseminationContext {
                map: &sc.map,
                states,
                link: sc.link,
                atten: sc.atten,
                fog: &sc.fog,
                range_m: sc.range_m,
                rule: sc.rule,
                relay_proc_s: sc.mac.relay_proc_s,
                cloud_rtt_s: sc.cloud_rtt_s,
                d_norm_hint,
            };
            let plan = plan_dissemination(&ctx, sc.protocol, spec.sender)?;
            let intended =
                crate::mobility::neighbors_in_range(states, spec.sender, sc.range_m)
                    .map_err(PlanError::Trace)?;
            let mut delivered = BTreeSet::new();
            delivered.insert(NodeId::Vehicle(spec.sender));
            self.msgs.push(MsgRt {
                id: MsgId(i as u32),
                origin: spec.sender,
                intended,
                plan,
                snapshot,
                size_bytes: spec.size_bytes,
                delivered,
                recorded: BTreeSet::new(),
                fail_cause: BTreeMap::new(),
            });
            self.schedule(secs_to_nanos(spec.time_s), Ev::Emit { msg: i });
        }
        if sc.mac.beacon_rate_hz > 0.0 {
            let period = secs_to_nanos(1.0 / sc.mac.beacon_rate_hz);
            for id in sc.trace.vehicle_ids() {
                let phase = self.rng.gen_range(0..period.max(1));
                if phase <= self.duration_ns {
                    self.schedule(phase, Ev::BeaconTick { vehicle: id });
                }
            }
        }
        Ok(())
    }

    fn run(&mut self) {
        while let Some(entry) = self.queue.pop() {
            debug_assert!(entry.at >= self.now, "event time went backwards");
            self.now = entry.at;
            match entry.ev {
                Ev::Emit { msg } => self.on_emit(msg),
                Ev::Enqueue { stash, front } => self.on_enqueue(stash, front),
                Ev::TxStart { node } => self.on_tx_start(node),
                Ev::TxEnd { node } => self.on_tx_end(node),
                Ev::RxResolve { res, rcpt } => self.on_rx_resolve(res, rcpt),
                Ev::BeaconTick { vehicle } => self.on_beacon_tick(vehicle),
            }
        }
    }

    /// Terminal outcomes for everything that never got delivered, then the
    /// assembled log.
    fn finish(mut self) -> EventLog {
        for m in &self.msgs {
            for &v in &m.intended {
                if m.recorded.contains(&v) {
                    continue;
                }
                let outcome = match m.fail_cause.get(&v).copied() {
                    Some(CAUSE_COLLIDED) => Outcome::Collided,
                    Some(CAUSE_SHADOW) => Outcome::DroppedShadow,
                    _ => Outcome::OutOfRange,
                };
                self.outcomes.push(OutcomeRecord { msg: m.id, receiver: v, outcome, hops: vec![] });
            }
        }
        EventLog {
            outcomes: self.outcomes,
            frames: self.frames,
            no_neighbor_msgs: self.no_neighbor,
        }
    }

    fn on_emit(&mut self, mi: usize) {
        if self.msgs[mi].plan.no_neighbors {
            let id = self.msgs[mi].id;
            self.no_neighbor.push(id);
            return;
        }
        for (v, fail) in self.msgs[mi].plan.immediate.clone() {
            let cause = match fail {
                PlannedFailure::Shadowed => CAUSE_SHADOW,
                PlannedFailure::Unroutable => CAUSE_RANGE,
            };
            self.note_failure(mi, v, cause);
        }
        let roots = self.msgs[mi].plan.roots.clone();
        for step in roots {
            let frame = self.build_step_frame(mi, step, self.now, Arc::new(Vec::new()));
            self.schedule_enqueue(frame, false);
        }
    }

    fn build_step_frame(
        &self,
        mi: usize,
        step_idx: usize,
        takeover_ns: Nanos,
        prefix: Arc<Vec<HopDelay>>,
    ) -> Frame {
        let m = &self.msgs[mi];
        let step = &m.plan.steps[step_idx];
        let proc_ns = secs_to_nanos(step.proc_s);
        let range_m = match step.sender {
            NodeId::Vehicle(_) => self.sc.range_m,
            NodeId::Fog(fid) => self
                .sc
                .fog
                .iter()
                .find(|f| f.id == fid)
                .map(|f| f.coverage_m)
                .unwrap_or(self.sc.range_m),
        };
        Frame {
            msg: Some(mi),
            sender: step.sender,
            sender_pos: step.sender_pos,
            range_m,
            elevated: step.elevated,
            recipients: step
                .recipients
                .iter()
                .map(|r| Rcpt { node: r.node, pos: r.pos, forwards: r.forwards.clone() })
                .collect(),
            attempt: 0,
            proc_ns,
            enqueue_ns: takeover_ns + proc_ns,
            first_head_ns: None,
            prefix,
            trans_ns: secs_to_nanos(
                transmission_delay(m.size_bytes, self.sc.mac.data_rate_bps)
                    .expect("validated size and rate"),
            ),
        }
    }

    fn schedule_enqueue(&mut self, frame: Frame, front: bool) {
        let at = frame.enqueue_ns.max(self.now);
        self.stash.push(Some(frame));
        let idx = self.stash.len() - 1;
        self.schedule(at, Ev::Enqueue { stash: idx, front });
    }

    /// Re-enqueue of a frame whose timing fields must stay untouched (retry).
    fn schedule_requeue(&mut self, frame: Frame) {
        self.stash.push(Some(frame));
        let idx = self.stash.len() - 1;
        self.schedule(self.now, Ev::Enqueue { stash: idx, front: true });
    }

    fn on_enqueue(&mut self, stash: usize, front: bool) {
        let frame = self.stash[stash].take().expect("frame consumed once");
        let node = frame.sender;
        let state = self.nodes.entry(node).or_default();
        if front {
            state.queue.push_front(frame);
        } else {
            state.queue.push_back(frame);
        }
        if !state.busy {
            state.busy = true;
            self.head_begin(node);
        }
    }

    /// The queue head starts contending: first attempts go straight to the
    /// channel check, retries wait out a fresh backoff first.
    fn head_begin(&mut self, node: NodeId) {
        let state = self.nodes.get_mut(&node).expect("busy node exists");
        let head = state.queue.front_mut().expect("busy node has a head frame");
        if head.first_head_ns.is_none() {
            head.first_head_ns = Some(self.now);
        }
        let attempt = head.attempt;
        let wait = if attempt == 0 {
            0
        } else {
            u64::from(backoff_slots(attempt, self.sc.mac.cw_min, self.sc.mac.cw_max, &mut self.rng))
                * self.slot_ns
        };
        self.schedule(self.now + wait, Ev::TxStart { node });
    }

    /// Channel occupancy around `pos` at this instant. A transmission
    /// starting exactly now is not audible yet, which lets simultaneous
    /// starts collide instead of deferring.
    fn sense_busy(&self, pos: Point) -> Option<Nanos> {
        let lo = self.now.saturating_sub(self.max_tx_dur + 1);
        let from = self.committed.partition_point(|c| c.start <= lo);
        let mut busy_until = None;
        for c in &self.committed[from..] {
            if c.start >= self.now {
                break;
            }
            if c.end > self.now && c.pos.distance(pos) <= c.range_m {
                busy_until = Some(busy_until.map_or(c.end, |b: Nanos| b.max(c.end)));
            }
        }
        busy_until
    }

    fn on_tx_start(&mut self, node: NodeId) {
        let (pos, attempt) = {
            let state = self.nodes.get(&node).expect("node exists");
            let head = state.queue.front().expect("head frame present");
            (head.sender_pos, head.attempt)
        };
        if let Some(busy_until) = self.sense_busy(pos) {
            let wait =
                u64::from(backoff_slots(attempt, self.sc.mac.cw_min, self.sc.mac.cw_max, &mut self.rng))
                    * self.slot_ns;
            self.schedule(busy_until + wait, Ev::TxStart { node });
            return;
        }

        let frame = self
            .nodes
            .get_mut(&node)
            .expect("node exists")
            .queue
            .pop_front()
            .expect("head frame present");
        let start = self.now;
        let end = start + frame.trans_ns;
        let tx_idx = self.committed.len();
        self.committed.push(CommittedTx {
            start,
            end,
            pos: frame.sender_pos,
            range_m: frame.range_m,
        });
        self.max_tx_dur = self.max_tx_dur.max(frame.trans_ns);
        self.schedule(end, Ev::TxEnd { node });

        if let Some(mi) = frame.msg {
            let frame_rec = self.frames.len();
            self.frames.push(FrameRecord {
                id: frame_rec as u64,
                msg: self.msgs[mi].id,
                sender: frame.sender,
                attempt: frame.attempt,
                start_ns: start,
                end_ns: end,
                n_intended: frame.recipients.len() as u32,
                collided: false,
            });
            if !frame.recipients.is_empty() {
                let res = self.resolutions.len();
                for (i, r) in frame.recipients.iter().enumerate() {
                    let prop = secs_to_nanos(propagation_delay(frame.sender_pos.distance(r.pos)));
                    self.schedule(end + prop, Ev::RxResolve { res, rcpt: i });
                }
                let pending = frame.recipients.len();
                self.resolutions.push(Some(Resolution {
                    frame,
                    start,
                    end,
                    tx_idx,
                    frame_rec,
                    pending,
                    fails: Vec::new(),
                }));
            }
        }
    }

    fn on_tx_end(&mut self, node: NodeId) {
        let state = self.nodes.get_mut(&node).expect("node exists");
        if state.queue.is_empty() {
            state.busy = false;
        } else {
            self.head_begin(node);
        }
    }

    /// Any other transmission audible at the receiver overlapping the frame's
    /// arrival window destroys the reception.
    fn interfered(&self, res: &Resolution, rcpt: &Rcpt) -> bool {
        let frame = &res.frame;
        let prop = secs_to_nanos(propagation_delay(frame.sender_pos.distance(rcpt.pos)));
        let arr_start = res.start + prop;
        let arr_end = res.end + prop;
        let lo = arr_start.saturating_sub(self.max_tx_dur + self.prop_slack);
        let from = self.committed.partition_point(|c| c.start <= lo);
        for (idx, c) in self.committed.iter().enumerate().skip(from) {
            if c.start >= arr_end {
                break;
            }
            if idx == res.tx_idx {
                continue;
            }
            let d = c.pos.distance(rcpt.pos);
            if d > c.range_m {
                continue;
            }
            let cp = secs_to_nanos(propagation_delay(d));
            if c.start + cp < arr_end && c.end + cp > arr_start {
                return true;
            }
        }
        false
    }

    fn on_rx_resolve(&mut self, res_idx: usize, rcpt_idx: usize) {
        let fail: Option<FailKind> = {
            let res = self.resolutions[res_idx].as_ref().expect("resolution open");
            let frame = &res.frame;
            let rcpt = &frame.recipients[rcpt_idx];
            let power_fail = if frame.elevated {
                None
            } else {
                let (feasible, obstruction) = link_feasible(
                    &self.sc.map,
                    self.sc.link,
                    self.sc.atten,
                    frame.sender_pos,
                    rcpt.pos,
                );
                (!feasible).then_some(FailKind::Power { crossings: obstruction.wall_crossings })
            };
            match power_fail {
                Some(f) => Some(f),
                None if self.sc.mac.collisions && self.interfered(res, rcpt) => {
                    Some(FailKind::Collision)
                }
                None => None,
            }
        };

        match fail {
            None => self.on_reception(res_idx, rcpt_idx),
            Some(kind) => {
                let res = self.resolutions[res_idx].as_mut().expect("resolution open");
                res.fails.push((rcpt_idx, kind));
            }
        }

        let done = {
            let res = self.resolutions[res_idx].as_mut().expect("resolution open");
            res.pending -= 1;
            res.pending == 0
        };
        if done {
            self.finish_frame(res_idx);
        }
    }

    fn on_reception(&mut self, res_idx: usize, rcpt_idx: usize) {
        let arrival = self.now;
        let (mi, node, pos, forwards, hop, prefix) = {
            let res = self.resolutions[res_idx].as_ref().expect("resolution open");
            let frame = &res.frame;
            let rcpt = &frame.recipients[rcpt_idx];
            let first_head = frame.first_head_ns.expect("transmitted frame reached the head");
            let hop = HopDelay::new(
                res.end - res.start,
                first_head - frame.enqueue_ns,
                res.start - first_head,
                frame.proc_ns,
                arrival - res.end,
            );
            (
                frame.msg.expect("resolutions track message frames"),
                rcpt.node,
                rcpt.pos,
                rcpt.forwards.clone(),
                hop,
                frame.prefix.clone(),
            )
        };

        if !self.msgs[mi].delivered.insert(node) {
            return; // duplicate copy
        }

        let mut path: Vec<HopDelay> = Vec::with_capacity(prefix.len() + 1);
        path.extend_from_slice(&prefix);
        path.push(hop);

        if let NodeId::Vehicle(v) = node {
            if self.msgs[mi].intended.contains(&v) && self.msgs[mi].recorded.insert(v) {
                self.outcomes.push(OutcomeRecord {
                    msg: self.msgs[mi].id,
                    receiver: v,
                    outcome: Outcome::Delivered { at_ns: arrival },
                    hops: path.clone(),
                });
            }
        }

        let new_prefix = Arc::new(path);
        for step in forwards {
            let frame = self.build_step_frame(mi, step, arrival, new_prefix.clone());
            self.schedule_enqueue(frame, false);
        }

        if self.msgs[mi].plan.flood {
            if let NodeId::Vehicle(v) = node {
                if v != self.msgs[mi].origin {
                    self.flood_rebroadcast(mi, v, pos, arrival, new_prefix);
                }
            }
        }
    }

    /// First reception at a vehicle under flooding: rebroadcast once to
    /// everyone in range after a random jitter.
    fn flood_rebroadcast(
        &mut self,
        mi: usize,
        v: VehicleId,
        pos: Point,
        arrival: Nanos,
        prefix: Arc<Vec<HopDelay>>,
    ) {
        let states = &self.sc.trace.snapshots[self.msgs[mi].snapshot].states;
        let recipients: Vec<Rcpt> = states
            .iter()
            .filter(|s| s.id != v && s.pos.distance(pos) <= self.sc.range_m)
            .map(|s| Rcpt { node: NodeId::Vehicle(s.id), pos: s.pos, forwards: vec![] })
            .collect();
        if recipients.is_empty() {
            return;
        }
        let jitter = if self.flood_jitter_ns == 0 {
            0
        } else {
            self.rng.gen_range(0..=self.flood_jitter_ns)
        };
        let trans_ns = secs_to_nanos(
            transmission_delay(self.msgs[mi].size_bytes, self.sc.mac.data_rate_bps)
                .expect("validated size and rate"),
        );
        self.schedule_enqueue(
            Frame {
                msg: Some(mi),
                sender: NodeId::Vehicle(v),
                sender_pos: pos,
                range_m: self.sc.range_m,
                elevated: false,
                recipients,
                attempt: 0,
                proc_ns: jitter,
                enqueue_ns: arrival + jitter,
                first_head_ns: None,
                prefix,
                trans_ns,
            },
            false,
        );
    }

    /// All receptions of a frame are resolved: mark the frame record, retire
    /// deterministic failures, retry collisions while attempts remain.
    fn finish_frame(&mut self, res_idx: usize) {
        let res = self.resolutions[res_idx].take().expect("resolution open");
        let mi = res.frame.msg.expect("resolutions track message frames");
        let any_collision = res.fails.iter().any(|(_, k)| *k == FailKind::Collision);
        self.frames[res.frame_rec].collided = any_collision;

        let mut retry_rcpts: Vec<Rcpt> = Vec::new();
        for (i, kind) in &res.fails {
            let rcpt = &res.frame.recipients[*i];
            match kind {
                FailKind::Power { crossings } => {
                    let cause = if *crossings > 0 { CAUSE_SHADOW } else { CAUSE_RANGE };
                    self.fail_branch(mi, rcpt, cause);
                }
                FailKind::Collision => {
                    if res.frame.attempt + 1 < self.sc.mac.max_attempts {
                        retry_rcpts.push(rcpt.clone());
                    } else {
                        self.fail_branch(mi, rcpt, CAUSE_COLLIDED);
                    }
                }
            }
        }
        if !retry_rcpts.is_empty() {
            let mut retry = res.frame;
            retry.attempt += 1;
            retry.recipients = retry_rcpts;
            self.schedule_requeue(retry);
        }
    }

    /// A recipient definitively missed this frame: note the cause for it and
    /// for every target downstream of its forwarding duties.
    fn fail_branch(&mut self, mi: usize, rcpt: &Rcpt, cause: u8) {
        if let NodeId::Vehicle(v) = rcpt.node {
            self.note_failure(mi, v, cause);
        }
        let mut stack = rcpt.forwards.clone();
        while let Some(step_idx) = stack.pop() {
            let step = &self.msgs[mi].plan.steps[step_idx];
            let mut downstream: Vec<(VehicleId, Vec<usize>)> = Vec::new();
            for r in &step.recipients {
                if let NodeId::Vehicle(v) = r.node {
                    downstream.push((v, r.forwards.clone()));
                } else {
                    stack.extend_from_slice(&r.forwards);
                }
            }
            for (v, forwards) in downstream {
                self.note_failure(mi, v, cause);
                stack.extend_from_slice(&forwards);
            }
        }
    }

    fn note_failure(&mut self, mi: usize, v: VehicleId, cause: u8) {
        let m = &mut self.msgs[mi];
        if !m.intended.contains(&v) {
            return;
        }
        let entry = m.fail_cause.entry(v).or_insert(0);
        *entry = (*entry).max(cause);
    }

    fn on_beacon_tick(&mut self, vehicle: VehicleId) {
        let snap = self.sc.trace.snapshot_at(self.now as f64 / 1e9);
        let Some(state) = snap.state_of(vehicle) else { return };
        let trans_ns = secs_to_nanos(
            transmission_delay(self.sc.mac.beacon_size_bytes.max(1), self.sc.mac.data_rate_bps)
                .expect("validated rate"),
        );
        self.schedule_enqueue(
            Frame {
                msg: None,
                sender: NodeId::Vehicle(vehicle),
                sender_pos: state.pos,
                range_m: self.sc.range_m,
                elevated: false,
                recipients: Vec::new(),
                attempt: 0,
                proc_ns: 0,
                enqueue_ns: self.now,
                first_head_ns: None,
                prefix: Arc::new(Vec::new()),
                trans_ns,
            },
            false,
        );
        let period = secs_to_nanos(1.0 / self.sc.mac.beacon_rate_hz);
        let next = self.now + period;
        if next <= self.duration_ns {
            self.schedule(next, Ev::BeaconTick { vehicle });
        }
    }
}
