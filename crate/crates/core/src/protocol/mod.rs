//! Per-packet forwarding logic.
//!
//! Protocol code only sees a node's own [`NodeState`] (fed by beacons in the
//! simulator, or built straight from a graph in [`walk`]) and the packet it
//! holds. Every handler is a deterministic function of `(packet, node state,
//! rnd)`; the caller supplies the random draw.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ellipse::EllipseModel;
use crate::error::{Error, Result};
use crate::geometry::{Ellipse, NodeId, Point};

pub mod capacity;
pub mod gf;
pub mod mcr;
pub mod qfgeo;
pub mod trace;
pub mod walk;

pub use capacity::{estimate_phi, estimate_theta, ThetaMode};
pub use gf::gf_forward;
pub use mcr::{mcr_setup, widest_path, McrRoute};
pub use qfgeo::{on_backtrack_received, qfgeo_forward, qfgeo_on_packet, qfgeo_on_tx_failure};
pub use trace::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PacketId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FlowId(pub u32);

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Data packet size in bits (1000 bytes).
pub const PACKET_BITS: u32 = 8000;

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: PacketId,
    pub flow: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Destination position as last returned by the location service.
    pub dst_pos: Point,
    /// Capacity requirement `C(fl)` of the packet's flow, as a share of a
    /// data channel.
    pub capacity_req: f64,
    /// Current forwarding ellipse; `None` until the source sets it.
    pub ellipse: Option<Ellipse>,
    pub visited: BTreeSet<NodeId>,
    /// Traversal parent of each node the packet was forwarded to.
    pub parent_of: BTreeMap<NodeId, NodeId>,
    /// Explicit hop list for source-routed packets.
    pub route: Option<Vec<NodeId>>,
    pub payload_bits: u32,
    pub created_slot: u64,
    pub hops: u32,
}

impl Packet {
    pub fn new(id: PacketId, flow: FlowId, src: NodeId, dst: NodeId, dst_pos: Point) -> Self {
        Packet {
            id,
            flow,
            src,
            dst,
            dst_pos,
            capacity_req: 0.0,
            ellipse: None,
            visited: BTreeSet::new(),
            parent_of: BTreeMap::new(),
            route: None,
            payload_bits: PACKET_BITS,
            created_slot: 0,
            hops: 0,
        }
    }

    /// Current ellipse factor, if set.
    pub fn ell(&self) -> Option<f64> {
        self.ellipse.map(|e| e.factor)
    }

    /// Whether the parent links form a forest without cycles.
    pub fn parent_links_acyclic(&self) -> bool {
        self.parent_of.keys().all(|&start| {
            let mut cur = start;
            let mut steps = 0;
            while let Some(&p) = self.parent_of.get(&cur) {
                cur = p;
                steps += 1;
                if steps > self.parent_of.len() {
                    return false;
                }
            }
            true
        })
    }
}

/// What a node knows about one neighbor from its last beacon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborEntry {
    pub position: Point,
    pub theta: f64,
    pub last_heard: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeState {
    pub id: NodeId,
    pub position: Point,
    /// Residual capacity estimate in `[0, 1]`.
    pub theta: f64,
    pub neighbors: BTreeMap<NodeId, NeighborEntry>,
    /// Last forwarding target per flow.
    pub last_forwarder: BTreeMap<FlowId, NodeId>,
    /// Neighbors that backtracked a given packet to this node.
    pub backtrack_sets: BTreeMap<PacketId, BTreeSet<NodeId>>,
    /// Neighbors that backtracked some packet of a flow; they are never
    /// prioritized for that flow again at this node.
    pub demoted: BTreeMap<FlowId, BTreeSet<NodeId>>,
    pub retx: BTreeMap<PacketId, u32>,
    /// Ellipse recomputations caused by exhausted retransmissions.
    pub reroutes: BTreeMap<PacketId, u32>,
}

impl NodeState {
    pub fn new(id: NodeId, position: Point) -> Self {
        NodeState {
            id,
            position,
            theta: 1.0,
            ..Default::default()
        }
    }

    pub fn set_neighbor(&mut self, id: NodeId, position: Point, theta: f64, now: u64) {
        self.neighbors.insert(
            id,
            NeighborEntry {
                position,
                theta,
                last_heard: now,
            },
        );
    }

    /// Drops neighbor entries not heard since `oldest`.
    pub fn expire_neighbors(&mut self, oldest: u64) {
        self.neighbors.retain(|_, e| e.last_heard >= oldest);
    }

    pub fn retx_of(&self, p: PacketId) -> u32 {
        self.retx.get(&p).copied().unwrap_or(0)
    }

    /// Clears per-packet retransmission bookkeeping after the packet left.
    pub fn packet_sent(&mut self, p: PacketId) {
        self.retx.remove(&p);
        self.reroutes.remove(&p);
    }

    pub fn neighbor_thetas(&self) -> Vec<f64> {
        self.neighbors.values().map(|e| e.theta).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropReason {
    /// Back at the source with nowhere left to go.
    Exhausted,
    /// Greedy forwarding hit a local minimum.
    LocalMinimum,
    RetxExceeded,
    HeaderOverflow,
    NoRoute,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Exhausted => "exhausted",
            DropReason::LocalMinimum => "local_minimum",
            DropReason::RetxExceeded => "retx_exceeded",
            DropReason::HeaderOverflow => "header_overflow",
            DropReason::NoRoute => "no_route",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Forward(NodeId),
    Backtrack(NodeId),
    Deliver,
    Drop(DropReason),
}

impl Action {
    pub fn target(&self) -> Option<NodeId> {
        match *self {
            Action::Forward(u) | Action::Backtrack(u) => Some(u),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Action::Forward(_) => "forward",
            Action::Backtrack(_) => "backtrack",
            Action::Deliver => "deliver",
            Action::Drop(_) => "drop",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForwardDecision {
    pub action: Action,
    /// The flow's last-forwarder memory picked the target.
    pub used_memory: bool,
    /// The epsilon draw asked for a fresh greedy choice.
    pub explored: bool,
    /// The ellipse was (re)computed while handling the packet.
    pub ell_recomputed: bool,
}

impl ForwardDecision {
    pub fn plain(action: Action) -> Self {
        ForwardDecision {
            action,
            used_memory: false,
            explored: false,
            ell_recomputed: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolKind {
    QfGeo,
    Gf,
    Mcr,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::QfGeo => "qfgeo",
            ProtocolKind::Gf => "gf",
            ProtocolKind::Mcr => "mcr",
        }
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qfgeo" | "qf-geo" => Ok(ProtocolKind::QfGeo),
            "gf" => Ok(ProtocolKind::Gf),
            "mcr" => Ok(ProtocolKind::Mcr),
            other => Err(Error::invalid(format!("unknown protocol `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    /// Probability of ignoring the last-forwarder memory.
    pub epsilon: f64,
    pub retx_max: u32,
    /// Residual capacity threshold used when estimating `phi`.
    pub c_min: f64,
    pub model: EllipseModel,
    /// Network density assumed by the node; a configuration input.
    pub rho: f64,
    /// Search without a bounding ellipse (QF-Geo-A).
    pub unbounded: bool,
    pub theta_mode: ThetaMode,
    /// Ellipse recomputations a node attempts for one packet before
    /// dropping it.
    pub max_reroutes: u32,
    /// Largest visited set a packet header may carry.
    pub header_cap: usize,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            epsilon: 0.1,
            retx_max: 3,
            c_min: 0.2,
            model: EllipseModel::REFERENCE,
            rho: 2.0,
            unbounded: false,
            theta_mode: ThetaMode::Linear,
            max_reroutes: 2,
            header_cap: 64,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!("epsilon must be in [0,1], got {}", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.c_min) {
            return Err(Error::Config(format!("c_min must be in [0,1], got {}", self.c_min)));
        }
        if !(self.rho > 0.0) {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if self.header_cap == 0 {
            return Err(Error::Config("header_cap must be positive".into()));
        }
        EllipseModel::new(self.model.alpha, self.model.beta, self.model.gamma, self.model.ell_min)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Lowest-distance candidate to `target`; ties go to the lowest id.
pub(crate) fn closest_to<'a, I>(candidates: I, target: &Point) -> Option<NodeId>
where
    I: IntoIterator<Item = (NodeId, &'a Point)>,
{
    candidates
        .into_iter()
        .map(|(id, pos)| (pos.dist(target), id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}
