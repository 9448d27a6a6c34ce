//! Dissemination protocols expressed as routing plans.
//!
//! Planning is pure: given an immutable snapshot of the world it produces a
//! [`RoutePlan`] — a tree of broadcasts, each listing who must decode it and
//! which follow-up transmissions a successful decode triggers. The engine
//! executes plans under contention; planning never touches the clock or RNG.
//!
//! The hybrid scheme classifies every in-range receiver: clear-path receivers
//! are served directly (multi-hop when out of direct reach), wall-shadowed
//! receivers are served through the fog layer. The four baselines cover the
//! comparison space: shadowing-unaware relaying, cloud-gateway relaying,
//! fog-for-everyone, and plain flooding.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::engine::NodeId;
use crate::geometry::{ObstacleMap, Point};
use crate::mobility::{neighbors_in_range, TraceError, VehicleId, VehicleState};
use crate::radio::{classify_receiver, AttenuationParams, LinkBudget, ReceiverClass};

/// Elevated roadside/base-station relay with its own coverage disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FogNode {
    pub id: u32,
    pub pos: Point,
    pub coverage_m: f64,
    /// Processing time spent in the fog layer before the downlink, seconds.
    pub proc_s: f64,
}

/// Protocol under simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProtocolKind {
    HybridVehfog,
    Flooding,
    RelayMultihop,
    CloudRelay,
    FogOnly,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::HybridVehfog,
        ProtocolKind::Flooding,
        ProtocolKind::RelayMultihop,
        ProtocolKind::CloudRelay,
        ProtocolKind::FogOnly,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::HybridVehfog => "hybrid_vehfog",
            ProtocolKind::Flooding => "flooding",
            ProtocolKind::RelayMultihop => "relay_multihop",
            ProtocolKind::CloudRelay => "cloud_relay",
            ProtocolKind::FogOnly => "fog_only",
        }
    }

    /// True for protocols that cannot run without fog infrastructure.
    pub fn needs_fog(&self) -> bool {
        matches!(self, ProtocolKind::HybridVehfog | ProtocolKind::FogOnly)
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProtocolKind::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown protocol {s:?}"))
    }
}

/// How the hybrid scheme decides between its two branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionRule {
    /// Classify each receiver individually (the default).
    PerReceiverShadowing,
    /// Threshold the global success-rate score and route the whole message
    /// through one branch.
    Eq6Threshold,
}

impl std::str::FromStr for DecisionRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per_receiver_shadowing" => Ok(DecisionRule::PerReceiverShadowing),
            "eq6_threshold" => Ok(DecisionRule::Eq6Threshold),
            other => Err(format!("unknown decision rule {other:?}")),
        }
    }
}

/// Branch selected by the success-rate threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisseminationMode {
    MultiHop,
    Fog,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("protocol {0} requires at least one fog node")]
    NoFogNodes(ProtocolKind),
    #[error("success-rate inputs out of domain: p_msg={p_msg}, d_norm={d_norm}, n_users={n_users}")]
    Eq6Domain { p_msg: f64, d_norm: f64, n_users: u32 },
}

/// Everything planning needs about the world at one instant.
pub struct DisseminationContext<'a> {
    pub map: &'a ObstacleMap,
    pub states: &'a [VehicleState],
    pub link: LinkBudget,
    pub atten: AttenuationParams,
    pub fog: &'a [FogNode],
    pub range_m: f64,
    pub rule: DecisionRule,
    /// Relay processing time per forwarding vehicle, seconds.
    pub relay_proc_s: f64,
    /// Cloud round trip added to every cloud downlink, seconds.
    pub cloud_rtt_s: f64,
    /// Normalized single-hop delay estimate fed to the threshold rule.
    pub d_norm_hint: f64,
}

impl<'a> DisseminationContext<'a> {
    fn pos(&self, id: VehicleId) -> Point {
        self.states
            .iter()
            .find(|s| s.id == id)
            .map(|s| s.pos)
            .expect("vehicle present in snapshot")
    }

    /// Classification of the `from -> to` link; caller guarantees the pair is
    /// within transmission range.
    pub fn classify(&self, from: Point, to: Point) -> ReceiverClass {
        classify_receiver(self.map, self.link, self.atten, from, to, self.range_m)
            .expect("link within range")
    }
}

/// Why a receiver was written off at planning time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannedFailure {
    /// Shadowed with no fog coverage.
    Shadowed,
    /// No forwarding chain reaches it.
    Unroutable,
}

/// One planned broadcast.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanStep {
    pub sender: NodeId,
    pub sender_pos: Point,
    /// Processing spent at the sender before this frame enters its queue,
    /// seconds. Accounted as the hop's `t_proc`.
    pub proc_s: f64,
    /// Elevated-infrastructure link: building obstruction is ignored.
    pub elevated: bool,
    pub recipients: Vec<PlanRecipient>,
}

/// One addressed receiver of a planned broadcast.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRecipient {
    pub node: NodeId,
    pub pos: Point,
    /// Steps this node must transmit once it decodes the frame.
    pub forwards: Vec<usize>,
}

/// Full routing plan for one message.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoutePlan {
    pub steps: Vec<PlanStep>,
    /// Steps the origin transmits immediately, in order.
    pub roots: Vec<usize>,
    /// Receivers that are written off before any frame is sent.
    pub immediate: Vec<(VehicleId, PlannedFailure)>,
    /// Flooding mode: every vehicle rebroadcasts once on first reception.
    pub flood: bool,
    /// The sender found nobody in range.
    pub no_neighbors: bool,
}

impl RoutePlan {
    fn no_neighbors() -> Self {
        RoutePlan { no_neighbors: true, ..Default::default() }
    }

    /// Hop count from the origin to `target` implied by the static plan tree
    /// (1 = direct). `None` when the plan never addresses the target.
    pub fn hops_to(&self, target: VehicleId) -> Option<u32> {
        fn walk(plan: &RoutePlan, step: usize, target: VehicleId, depth: u32) -> Option<u32> {
            let s = &plan.steps[step];
            for r in &s.recipients {
                if r.node == NodeId::Vehicle(target) {
                    return Some(depth);
                }
                for &next in &r.forwards {
                    if let Some(d) = walk(plan, next, target, depth + 1) {
                        return Some(d);
                    }
                }
            }
            None
        }
        self.roots.iter().find_map(|&root| walk(self, root, target, 1))
    }
}

/// Success-rate score decision: `m = clamp(p_msg * d_norm / n_users, 0, 1)`;
/// scores of 0.5 and above choose the multi-hop branch, everything below
/// routes through fog.
pub fn decide_mode_eq6(
    p_msg: f64,
    d_norm: f64,
    n_users: u32,
) -> Result<DisseminationMode, PlanError> {
    if !(0.0..=1.0).contains(&p_msg) || !(d_norm >= 0.0) || n_users == 0 {
        return Err(PlanError::Eq6Domain { p_msg, d_norm, n_users });
    }
    let m = (p_msg * d_norm / n_users as f64).clamp(0.0, 1.0);
    Ok(if m >= 0.5 { DisseminationMode::MultiHop } else { DisseminationMode::Fog })
}

/// Plans one message under the given protocol. Returns an empty plan flagged
/// `no_neighbors` when nobody is in transmission range.
pub fn plan_dissemination(
    ctx: &DisseminationContext,
    protocol: ProtocolKind,
    origin: VehicleId,
) -> Result<RoutePlan, PlanError> {
    if protocol.needs_fog() && ctx.fog.is_empty() {
        return Err(PlanError::NoFogNodes(protocol));
    }
    let neighbors = neighbors_in_range(ctx.states, origin, ctx.range_m)?;
    if neighbors.is_empty() {
        return Ok(RoutePlan::no_neighbors());
    }
    match protocol {
        ProtocolKind::HybridVehfog => hybrid_vehfog_disseminate(ctx, origin, &neighbors),
        ProtocolKind::Flooding => Ok(flooding_disseminate(ctx, origin, &neighbors)),
        ProtocolKind::RelayMultihop => Ok(relay_multihop_disseminate(ctx, origin, &neighbors)),
        ProtocolKind::CloudRelay => Ok(cloud_relay_disseminate(ctx, origin, &neighbors)),
        ProtocolKind::FogOnly => Ok(fog_only_disseminate(ctx, origin, &neighbors)),
    }
}

/// The hybrid scheme: scan the transmission range, classify every receiver,
/// serve clear receivers over vehicle-to-vehicle hops and shadowed receivers
/// through the fog layer. Under the threshold rule the branch is instead
/// chosen once for the whole receiver set.
pub fn hybrid_vehfog_disseminate(
    ctx: &DisseminationContext,
    origin: VehicleId,
    targets: &[VehicleId],
) -> Result<RoutePlan, PlanError> {
    let origin_pos = ctx.pos(origin);
    let mut clear: Vec<VehicleId> = Vec::new();
    let mut shadowed: Vec<VehicleId> = Vec::new();
    for &t in targets {
        if ctx.classify(origin_pos, ctx.pos(t)).shadowed {
            shadowed.push(t);
        } else {
            clear.push(t);
        }
    }
    match ctx.rule {
        DecisionRule::PerReceiverShadowing => {
            let mut plan = RoutePlan::default();
            multi_hop_send(ctx, origin, &clear, &mut plan);
            fog_layer_send(ctx, origin, &shadowed, &mut plan);
            Ok(plan)
        }
        DecisionRule::Eq6Threshold => {
            let p_msg = clear.len() as f64 / targets.len() as f64;
            let mode = decide_mode_eq6(p_msg, ctx.d_norm_hint, targets.len() as u32)?;
            let mut plan = RoutePlan::default();
            match mode {
                DisseminationMode::MultiHop => multi_hop_send(ctx, origin, targets, &mut plan),
                DisseminationMode::Fog => fog_layer_send(ctx, origin, targets, &mut plan),
            }
            Ok(plan)
        }
    }
}

/// Greedy geographic forwarding over clear links: at every hop pick the
/// in-range, non-shadowed neighbor closest to the target (ties to the lower
/// id). Targets with no progress possible are written off as unroutable.
pub fn multi_hop_send(
    ctx: &DisseminationContext,
    origin: VehicleId,
    targets: &[VehicleId],
    plan: &mut RoutePlan,
) {
    let paths = targets
        .iter()
        .filter_map(|&t| greedy_path(ctx, origin, t, true).map(|p| (t, p)))
        .collect::<Vec<_>>();
    for &t in targets {
        if !paths.iter().any(|(pt, _)| *pt == t) {
            plan.immediate.push((t, PlannedFailure::Unroutable));
        }
    }
    build_tree(ctx, origin, &paths, plan);
}

/// Shadowing-unaware baseline: direct when the target is in range, otherwise
/// forward through the farthest in-range vehicle that makes progress toward
/// the target.
pub fn relay_multihop_disseminate(
    ctx: &DisseminationContext,
    origin: VehicleId,
    targets: &[VehicleId],
) -> RoutePlan {
    let mut plan = RoutePlan::default();
    let paths = targets
        .iter()
        .filter_map(|&t| greedy_path(ctx, origin, t, false).map(|p| (t, p)))
        .collect::<Vec<_>>();
    for &t in targets {
        if !paths.iter().any(|(pt, _)| *pt == t) {
            plan.immediate.push((t, PlannedFailure::Unroutable));
        }
    }
    build_tree(ctx, origin, &paths, &mut plan);
    plan
}

/// Relay through the fog layer: uplink to the nearest fog node covering the
/// sender, fog processing, then one downlink per covered target. Downlinks
/// come from the fog node nearest to each target and ignore building
/// obstruction (elevated infrastructure). Targets outside all coverage are
/// written off as shadow drops.
pub fn fog_layer_send(
    ctx: &DisseminationContext,
    origin: VehicleId,
    targets: &[VehicleId],
    plan: &mut RoutePlan,
) {
    if targets.is_empty() {
        return;
    }
    let origin_pos = ctx.pos(origin);
    let uplink = nearest_fog(ctx.fog, origin_pos);
    let Some(uplink) = uplink else {
        for &t in targets {
            plan.immediate.push((t, PlannedFailure::Shadowed));
        }
        return;
    };

    // serving fog node per covered target
    let mut served: Vec<(u32, VehicleId)> = Vec::new();
    for &t in targets {
        match nearest_fog(ctx.fog, ctx.pos(t)) {
            Some(f) => served.push((f.id, t)),
            None => plan.immediate.push((t, PlannedFailure::Shadowed)),
        }
    }
    if served.is_empty() {
        return;
    }
    served.sort_unstable();

    let mut downlink_steps = Vec::with_capacity(served.len());
    for (fog_id, target) in served {
        let fog = ctx.fog.iter().find(|f| f.id == fog_id).expect("known fog id");
        plan.steps.push(PlanStep {
            sender: NodeId::Fog(fog.id),
            sender_pos: fog.pos,
            proc_s: fog.proc_s,
            elevated: true,
            recipients: vec![PlanRecipient {
                node: NodeId::Vehicle(target),
                pos: ctx.pos(target),
                forwards: vec![],
            }],
        });
        downlink_steps.push(plan.steps.len() - 1);
    }

    plan.steps.push(PlanStep {
        sender: NodeId::Vehicle(origin),
        sender_pos: origin_pos,
        proc_s: 0.0,
        elevated: true,
        recipients: vec![PlanRecipient {
            node: NodeId::Fog(uplink.id),
            pos: uplink.pos,
            forwards: downlink_steps,
        }],
    });
    plan.roots.push(plan.steps.len() - 1);
}

/// Everyone-rebroadcasts-once flooding. The static part is the origin's
/// broadcast; the rebroadcast wave is executed dynamically by the engine
/// (first reception triggers one jittered rebroadcast per vehicle).
pub fn flooding_disseminate(
    ctx: &DisseminationContext,
    origin: VehicleId,
    targets: &[VehicleId],
) -> RoutePlan {
    let mut plan = RoutePlan { flood: true, ..Default::default() };
    let origin_pos = ctx.pos(origin);
    plan.steps.push(PlanStep {
        sender: NodeId::Vehicle(origin),
        sender_pos: origin_pos,
        proc_s: 0.0,
        elevated: false,
        recipients: targets
            .iter()
            .map(|&t| PlanRecipient {
                node: NodeId::Vehicle(t),
                pos: ctx.pos(t),
                forwards: vec![],
            })
            .collect(),
    });
    plan.roots.push(0);
    plan
}

/// Cloud baseline: uplink to the nearest in-range gateway vehicle, a fixed
/// cloud round trip, then downlink broadcasts from the gateway vehicle
/// nearest to each receiver. Receivers with no vehicle in range of them are
/// unreachable.
pub fn cloud_relay_disseminate(
    ctx: &DisseminationContext,
    origin: VehicleId,
    targets: &[VehicleId],
) -> RoutePlan {
    let mut plan = RoutePlan::default();
    let origin_pos = ctx.pos(origin);

    // uplink gateway: nearest in-range vehicle, ties to the lower id
    let uplink_gw = targets
        .iter()
        .map(|&t| (ctx.pos(t).distance(origin_pos), t))
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
        .map(|(_, t)| t)
        .expect("targets are non-empty");

    // serving gateway per receiver: the nearest other vehicle, if in range
    let mut served: Vec<(VehicleId, VehicleId)> = Vec::new();
    for &t in targets {
        let t_pos = ctx.pos(t);
        let gw = ctx
            .states
            .iter()
            .filter(|s| s.id != t)
            .map(|s| (s.pos.distance(t_pos), s.id))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        match gw {
            Some((d, gw)) if d <= ctx.range_m => served.push((gw, t)),
            _ => plan.immediate.push((t, PlannedFailure::Unroutable)),
        }
    }
    served.sort_unstable();

    let mut downlink_steps = Vec::new();
    let mut i = 0;
    while i < served.len() {
        let gw = served[i].0;
        let mut recipients = Vec::new();
        while i < served.len() && served[i].0 == gw {
            recipients.push(PlanRecipient {
                node: NodeId::Vehicle(served[i].1),
                pos: ctx.pos(served[i].1),
                forwards: vec![],
            });
            i += 1;
        }
        plan.steps.push(PlanStep {
            sender: NodeId::Vehicle(gw),
            sender_pos: ctx.pos(gw),
            proc_s: ctx.cloud_rtt_s,
            elevated: false,
            recipients,
        });
        downlink_steps.push(plan.steps.len() - 1);
    }

    plan.steps.push(PlanStep {
        sender: NodeId::Vehicle(origin),
        sender_pos: origin_pos,
        proc_s: 0.0,
        elevated: false,
        recipients: vec![PlanRecipient {
            node: NodeId::Vehicle(uplink_gw),
            pos: ctx.pos(uplink_gw),
            forwards: downlink_steps,
        }],
    });
    plan.roots.push(plan.steps.len() - 1);
    plan
}

/// Fog-for-everyone baseline: every receiver is served through the fog layer
/// regardless of classification.
pub fn fog_only_disseminate(
    ctx: &DisseminationContext,
    origin: VehicleId,
    targets: &[VehicleId],
) -> RoutePlan {
    let mut plan = RoutePlan::default();
    fog_layer_send(ctx, origin, targets, &mut plan);
    plan
}

fn nearest_fog<'a>(fog: &'a [FogNode], p: Point) -> Option<&'a FogNode> {
    fog.iter()
        .filter(|f| f.pos.distance(p) <= f.coverage_m)
        .min_by(|a, b| {
            a.pos
                .distance(p)
                .partial_cmp(&b.pos.distance(p))
                .unwrap()
                .then(a.id.cmp(&b.id))
        })
}

/// Relay chain from `origin` to `target` (origin excluded, target included).
/// `loc_aware` restricts every link to non-shadowed classifications and picks
/// the neighbor closest to the target; the unaware variant picks the farthest
/// in-range vehicle that still makes progress.
fn greedy_path(
    ctx: &DisseminationContext,
    origin: VehicleId,
    target: VehicleId,
    loc_aware: bool,
) -> Option<Vec<VehicleId>> {
    let target_pos = ctx.pos(target);
    let mut cur_pos = ctx.pos(origin);
    let mut path = Vec::new();
    let mut visited = vec![origin];
    loop {
        let direct = cur_pos.distance(target_pos);
        if direct <= ctx.range_m && (!loc_aware || !ctx.classify(cur_pos, target_pos).shadowed) {
            path.push(target);
            return Some(path);
        }
        let mut best: Option<(f64, VehicleId, Point)> = None;
        for s in ctx.states {
            if s.id == target || visited.contains(&s.id) {
                continue;
            }
            let hop = cur_pos.distance(s.pos);
            if hop > ctx.range_m {
                continue;
            }
            let remaining = s.pos.distance(target_pos);
            if remaining >= direct {
                continue; // no progress
            }
            if loc_aware && ctx.classify(cur_pos, s.pos).shadowed {
                continue;
            }
            // loc-aware: minimize distance to target; unaware: maximize the
            // hop length (farthest forwarder)
            let score = if loc_aware { remaining } else { -hop };
            let better = match best {
                None => true,
                Some((bs, bid, _)) => {
                    score < bs - 1e-12 || ((score - bs).abs() <= 1e-12 && s.id < bid)
                }
            };
            if better {
                best = Some((score, s.id, s.pos));
            }
        }
        let (_, next, next_pos) = best?;
        path.push(next);
        visited.push(next);
        cur_pos = next_pos;
    }
}

/// Merges per-target relay chains into broadcast steps: one step per sending
/// vehicle, recipients sorted by id, children triggered by their parent's
/// reception.
fn build_tree(
    ctx: &DisseminationContext,
    origin: VehicleId,
    paths: &[(VehicleId, Vec<VehicleId>)],
    plan: &mut RoutePlan,
) {
    if paths.is_empty() {
        return;
    }

    #[derive(Default)]
    struct TreeNode {
        children: BTreeMap<VehicleId, TreeNode>,
    }

    let mut root = TreeNode::default();
    for (_, path) in paths {
        let mut node = &mut root;
        for &hop in path {
            node = node.children.entry(hop).or_default();
        }
    }

    fn emit(
        ctx: &DisseminationContext,
        plan: &mut RoutePlan,
        origin: VehicleId,
        sender: VehicleId,
        node: &TreeNode,
    ) -> usize {
        let idx = plan.steps.len();
        plan.steps.push(PlanStep {
            sender: NodeId::Vehicle(sender),
            sender_pos: ctx.pos(sender),
            proc_s: if sender == origin { 0.0 } else { ctx.relay_proc_s },
            elevated: false,
            recipients: Vec::new(),
        });
        let mut recipients = Vec::new();
        for (&child, child_node) in &node.children {
            let forwards = if child_node.children.is_empty() {
                vec![]
            } else {
                vec![emit(ctx, plan, origin, child, child_node)]
            };
            recipients.push(PlanRecipient {
                node: NodeId::Vehicle(child),
                pos: ctx.pos(child),
                forwards,
            });
        }
        plan.steps[idx].recipients = recipients;
        idx
    }

    let idx = emit(ctx, plan, origin, origin, &root);
    plan.roots.push(idx);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    fn state(id: VehicleId, x: f64, y: f64) -> VehicleState {
        VehicleState { id, pos: Point::new(x, y), speed_mps: 0.0, lane: 0 }
    }

    fn ctx<'a>(
        map: &'a ObstacleMap,
        states: &'a [VehicleState],
        fog: &'a [FogNode],
    ) -> DisseminationContext<'a> {
        DisseminationContext {
            map,
            states,
            link: LinkBudget::default(),
            atten: AttenuationParams::default(),
            fog,
            range_m: 300.0,
            rule: DecisionRule::PerReceiverShadowing,
            relay_proc_s: 1e-4,
            cloud_rtt_s: 0.05,
            d_norm_hint: 0.02,
        }
    }

    fn clear_map() -> ObstacleMap {
        ObstacleMap::empty(Rect::new(0.0, 0.0, 10_000.0, 1000.0))
    }

    #[test]
    fn eq6_threshold_boundaries() {
        assert_eq!(decide_mode_eq6(1.0, 1.0, 2).unwrap(), DisseminationMode::MultiHop);
        assert_eq!(decide_mode_eq6(0.999, 1.0, 2).unwrap(), DisseminationMode::Fog);
        assert_eq!(decide_mode_eq6(0.0, 1.0, 2).unwrap(), DisseminationMode::Fog);
        assert_eq!(decide_mode_eq6(1.0, 1.0, 1).unwrap(), DisseminationMode::MultiHop);
        assert!(decide_mode_eq6(1.5, 1.0, 1).is_err());
        assert!(decide_mode_eq6(0.5, -0.1, 1).is_err());
        assert!(decide_mode_eq6(0.5, 1.0, 0).is_err());
    }

    #[test]
    fn eq6_is_monotone_in_p_msg() {
        let mut prev = DisseminationMode::Fog;
        for i in 0..=100 {
            let p = i as f64 / 100.0;
            let mode = decide_mode_eq6(p, 1.2, 2).unwrap();
            if prev == DisseminationMode::MultiHop {
                assert_eq!(mode, DisseminationMode::MultiHop);
            }
            prev = mode;
        }
    }

    #[test]
    fn hybrid_on_clear_map_equals_relay_plan() {
        let map = clear_map();
        let states = vec![
            state(0, 1000.0, 2.0),
            state(1, 1100.0, 2.0),
            state(2, 1200.0, 5.5),
            state(3, 900.0, 9.0),
        ];
        let c = ctx(&map, &states, &[]);
        let targets = neighbors_in_range(&states, 0, 300.0).unwrap();
        let hybrid = hybrid_vehfog_disseminate(&c, 0, &targets).unwrap();
        let relay = relay_multihop_disseminate(&c, 0, &targets);
        assert_eq!(hybrid, relay);
        assert_eq!(hybrid.steps.len(), 1);
        assert_eq!(hybrid.steps[0].recipients.len(), 3);
    }

    #[test]
    fn hybrid_splits_clear_and_shadowed_receivers() {
        // sender and three clear receivers on the lower street; two receivers
        // behind a long building, with a fog node covering them
        let map = ObstacleMap::new(
            Rect::new(0.0, 0.0, 2000.0, 500.0),
            vec![Rect::new(800.0, 20.0, 1400.0, 100.0)],
        )
        .unwrap();
        let states = vec![
            state(1, 1000.0, 10.0), // sender
            state(2, 900.0, 10.0),
            state(3, 1100.0, 10.0),
            state(4, 1250.0, 10.0),
            state(5, 1000.0, 150.0),
            state(6, 1100.0, 150.0),
        ];
        let fog = [FogNode { id: 0, pos: Point::new(1100.0, 250.0), coverage_m: 500.0, proc_s: 1e-3 }];
        let c = ctx(&map, &states, &fog);
        let targets = neighbors_in_range(&states, 1, 300.0).unwrap();
        assert_eq!(targets, vec![2, 3, 4, 5, 6]);
        let plan = hybrid_vehfog_disseminate(&c, 1, &targets).unwrap();

        // multi-hop root covers 2..4 directly
        let mh_root = &plan.steps[*plan.roots.first().unwrap()];
        let direct: Vec<NodeId> = mh_root.recipients.iter().map(|r| r.node).collect();
        assert_eq!(
            direct,
            vec![NodeId::Vehicle(2), NodeId::Vehicle(3), NodeId::Vehicle(4)]
        );

        // fog branch serves 5 and 6 through the fog node
        assert!(plan.hops_to(5).is_some());
        assert_eq!(plan.hops_to(5), Some(2));
        assert_eq!(plan.hops_to(6), Some(2));
        assert!(plan.immediate.is_empty());
    }

    #[test]
    fn shadowed_targets_without_fog_are_dropped_at_plan_time() {
        let map = ObstacleMap::new(
            Rect::new(0.0, 0.0, 2000.0, 500.0),
            vec![Rect::new(800.0, 20.0, 1400.0, 100.0)],
        )
        .unwrap();
        let states = vec![state(1, 1000.0, 10.0), state(5, 1000.0, 150.0)];
        let fog: [FogNode; 0] = [];
        let mut c = ctx(&map, &states, &fog);
        c.fog = &fog;
        let mut plan = RoutePlan::default();
        fog_layer_send(&c, 1, &[5], &mut plan);
        assert_eq!(plan.immediate, vec![(5, PlannedFailure::Shadowed)]);
        assert!(plan.roots.is_empty());
    }

    #[test]
    fn fog_tie_breaks_to_lower_id() {
        let map = clear_map();
        let states = vec![state(0, 1000.0, 2.0), state(1, 1100.0, 2.0)];
        let fog = [
            FogNode { id: 3, pos: Point::new(900.0, 2.0), coverage_m: 400.0, proc_s: 1e-3 },
            FogNode { id: 1, pos: Point::new(1100.0, 2.0), coverage_m: 400.0, proc_s: 1e-3 },
            FogNode { id: 2, pos: Point::new(900.0, 2.0), coverage_m: 400.0, proc_s: 1e-3 },
        ];
        let c = ctx(&map, &states, &fog);
        let mut plan = RoutePlan::default();
        // sender at 1000: fog 1 is at distance 100, fogs 2 and 3 at 100 too
        fog_layer_send(&c, 0, &[1], &mut plan);
        let uplink = &plan.steps[plan.roots[0]];
        assert_eq!(uplink.recipients[0].node, NodeId::Fog(1));
    }

    #[test]
    fn multi_hop_routes_through_relay() {
        let map = clear_map();
        let states = vec![state(0, 0.0, 2.0), state(1, 280.0, 2.0), state(2, 500.0, 2.0)];
        let c = ctx(&map, &states, &[]);
        let mut plan = RoutePlan::default();
        multi_hop_send(&c, 0, &[2], &mut plan);
        assert_eq!(plan.hops_to(2), Some(2));
        assert_eq!(plan.steps.len(), 2);
    }

    #[test]
    fn multi_hop_direct_when_in_range() {
        let map = clear_map();
        let states = vec![state(0, 0.0, 2.0), state(1, 250.0, 2.0)];
        let c = ctx(&map, &states, &[]);
        let mut plan = RoutePlan::default();
        multi_hop_send(&c, 0, &[1], &mut plan);
        assert_eq!(plan.hops_to(1), Some(1));
    }

    #[test]
    fn multi_hop_hop_counts_match_bfs_on_line() {
        use rand::{Rng, SeedableRng};
        let map = clear_map();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x11e5);
        for _ in 0..20 {
            let mut states: Vec<VehicleState> = (0..50)
                .map(|id| state(id, rng.gen_range(0.0..5000.0), 2.0))
                .collect();
            states.sort_by(|a, b| a.pos.x.partial_cmp(&b.pos.x).unwrap());
            let ids: Vec<VehicleId> = states.iter().map(|s| s.id).collect();
            let origin = ids[0];
            let target = *ids.last().unwrap();
            let c = ctx(&map, &states, &[]);

            // breadth-first search over the in-range graph
            let bfs = {
                let mut dist: BTreeMap<VehicleId, u32> = BTreeMap::new();
                dist.insert(origin, 0);
                let mut frontier = vec![origin];
                while !frontier.is_empty() {
                    let mut next = Vec::new();
                    for &u in &frontier {
                        let du = dist[&u];
                        let up = states.iter().find(|s| s.id == u).unwrap().pos;
                        for s in &states {
                            if !dist.contains_key(&s.id) && s.pos.distance(up) <= 300.0 {
                                dist.insert(s.id, du + 1);
                                next.push(s.id);
                            }
                        }
                    }
                    frontier = next;
                }
                dist.get(&target).copied()
            };

            let mut plan = RoutePlan::default();
            multi_hop_send(&c, origin, &[target], &mut plan);
            match bfs {
                Some(hops) => assert_eq!(plan.hops_to(target), Some(hops)),
                None => assert_eq!(plan.immediate, vec![(target, PlannedFailure::Unroutable)]),
            }
        }
    }

    #[test]
    fn relay_multihop_prefers_farthest_forwarder() {
        let map = clear_map();
        // two candidate relays toward the target: 150 m and 280 m out
        let states = vec![
            state(0, 0.0, 2.0),
            state(1, 150.0, 2.0),
            state(2, 280.0, 2.0),
            state(3, 500.0, 2.0),
        ];
        let c = ctx(&map, &states, &[]);
        let plan = relay_multihop_disseminate(&c, 0, &[3]);
        let root = &plan.steps[plan.roots[0]];
        assert_eq!(root.recipients[0].node, NodeId::Vehicle(2));
    }

    #[test]
    fn cloud_relay_groups_downlinks_by_gateway() {
        let map = clear_map();
        let states = vec![
            state(0, 1000.0, 2.0),
            state(1, 1050.0, 2.0),
            state(2, 1100.0, 2.0),
            state(3, 1200.0, 2.0),
        ];
        let c = ctx(&map, &states, &[]);
        let targets = vec![1, 2, 3];
        let plan = cloud_relay_disseminate(&c, 0, &targets);
        // one uplink root plus downlink steps with the 50 ms round trip
        let root = &plan.steps[plan.roots[0]];
        assert_eq!(root.recipients[0].node, NodeId::Vehicle(1));
        assert!(plan
            .steps
            .iter()
            .filter(|s| s.proc_s == 0.05)
            .all(|s| !s.recipients.is_empty()));
        // the uplink gateway already holds the message after one hop; the
        // rest come back down through the cloud
        assert_eq!(plan.hops_to(1), Some(1));
        assert_eq!(plan.hops_to(2), Some(2));
        assert_eq!(plan.hops_to(3), Some(2));
    }

    #[test]
    fn flooding_plan_broadcasts_to_all_neighbors() {
        let map = clear_map();
        let states = vec![state(0, 0.0, 2.0), state(1, 100.0, 2.0), state(2, 200.0, 2.0)];
        let c = ctx(&map, &states, &[]);
        let plan = flooding_disseminate(&c, 0, &[1, 2]);
        assert!(plan.flood);
        assert_eq!(plan.steps[0].recipients.len(), 2);
    }

    #[test]
    fn appending_a_vehicle_keeps_existing_classifications() {
        let map = ObstacleMap::new(
            Rect::new(0.0, 0.0, 2000.0, 500.0),
            vec![Rect::new(800.0, 20.0, 1400.0, 100.0)],
        )
        .unwrap();
        let mut states = vec![
            state(1, 1000.0, 10.0),
            state(2, 900.0, 10.0),
            state(5, 1000.0, 150.0),
        ];
        let fog = [FogNode { id: 0, pos: Point::new(1100.0, 250.0), coverage_m: 500.0, proc_s: 1e-3 }];
        let snapshot = states.clone();
        let c = ctx(&map, &snapshot, &fog);
        let before: Vec<(VehicleId, u8)> = [2u32, 5]
            .iter()
            .map(|&t| (t, c.classify(c.pos(1), c.pos(t)).loc()))
            .collect();

        states.push(state(7, 1150.0, 10.0));
        let c2 = ctx(&map, &states, &fog);
        for (t, loc) in before {
            assert_eq!(c2.classify(c2.pos(1), c2.pos(t)).loc(), loc);
        }
    }

    #[test]
    fn protocol_names_round_trip() {
        for p in ProtocolKind::ALL {
            assert_eq!(p.name().parse::<ProtocolKind>().unwrap(), p);
        }
        assert!("gossip".parse::<ProtocolKind>().is_err());
    }
}
