//! Lossless, instantaneous packet walks over a static graph.
//!
//! Every node knows its true neighbors and their capacities, and every
//! transmission succeeds, so the walk exercises the forwarding logic alone.

use rand::Rng;

use super::{
    estimate_phi, gf_forward, on_backtrack_received, qfgeo_on_packet, Action, DropReason, FlowId, NodeState, Packet,
    PacketId, ProtocolParams, TraceRecord,
};
use crate::geometry::{NetworkGraph, NodeId};
use crate::seed::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct WalkOutcome {
    pub delivered: bool,
    pub drop: Option<DropReason>,
    pub forwards: usize,
    pub backtracks: usize,
    /// Nodes in the order they handled the packet, source first.
    pub path: Vec<NodeId>,
    /// Forwarding ellipse factor set at the source.
    pub ell: Option<f64>,
    pub trace: Vec<TraceRecord>,
    /// Final packet state.
    pub packet: Packet,
}

impl WalkOutcome {
    pub fn hops(&self) -> usize {
        self.forwards + self.backtracks
    }
}

pub struct StaticNetwork<'g> {
    pub graph: &'g NetworkGraph,
    pub states: Vec<NodeState>,
    pub params: ProtocolParams,
    next_packet: u64,
}

impl<'g> StaticNetwork<'g> {
    /// Node states with complete neighbor tables; `theta[v]` is node `v`'s
    /// residual capacity.
    pub fn new(graph: &'g NetworkGraph, theta: &[f64], params: ProtocolParams) -> Self {
        assert_eq!(theta.len(), graph.len(), "one capacity per node");
        let states = graph
            .node_ids()
            .map(|v| {
                let mut st = NodeState::new(v, *graph.position(v));
                st.theta = theta[v.0];
                for &u in graph.neighbors(v) {
                    st.set_neighbor(u, *graph.position(u), theta[u.0], 0);
                }
                st
            })
            .collect();
        StaticNetwork {
            graph,
            states,
            params,
            next_packet: 0,
        }
    }

    fn new_packet(&mut self, flow: FlowId, src: NodeId, dst: NodeId, capacity_req: f64) -> Packet {
        let id = PacketId(self.next_packet);
        self.next_packet += 1;
        let mut p = Packet::new(id, flow, src, dst, *self.graph.position(dst));
        p.capacity_req = capacity_req;
        p
    }

    /// Walks one QF-Geo packet from `src` to `dst`.
    pub fn route_qfgeo(&mut self, flow: FlowId, src: NodeId, dst: NodeId, capacity_req: f64, rng: &mut SimRng) -> WalkOutcome {
        let mut p = self.new_packet(flow, src, dst, capacity_req);
        let limit = 4 * self.graph.len() + 4;
        let mut out = WalkOutcome {
            delivered: false,
            drop: None,
            forwards: 0,
            backtracks: 0,
            path: vec![src],
            ell: None,
            trace: Vec::new(),
            packet: p.clone(),
        };
        let mut at = src;
        let mut came_back_from: Option<NodeId> = None;
        for step in 0..limit {
            let params = self.params;
            let state = &mut self.states[at.0];
            if let Some(from) = came_back_from.take() {
                on_backtrack_received(state, &p, from);
            }
            let phi = estimate_phi(&state.neighbor_thetas(), params.c_min);
            let decision = qfgeo_on_packet(&mut p, state, &params, phi, rng.gen::<f64>());
            if at == src && out.ell.is_none() {
                out.ell = p.ell();
            }
            out.trace.push(TraceRecord {
                time_slot: step as u64,
                packet: p.id.0,
                flow: p.flow.0,
                node: at.0,
                action: decision.action.name().to_string(),
                target: decision.action.target().map(|t| t.0),
                ell: p.ell(),
                retx: 0,
            });
            match decision.action {
                Action::Deliver => {
                    out.delivered = true;
                    break;
                }
                Action::Drop(reason) => {
                    out.drop = Some(reason);
                    break;
                }
                Action::Forward(u) => {
                    out.forwards += 1;
                    at = u;
                }
                Action::Backtrack(u) => {
                    out.backtracks += 1;
                    came_back_from = Some(at);
                    at = u;
                }
            }
            p.hops += 1;
            out.path.push(at);
        }
        out.packet = p;
        out
    }

    /// Walks one greedy-forwarding packet from `src` to `dst`.
    pub fn route_gf(&mut self, src: NodeId, dst: NodeId) -> WalkOutcome {
        let p = self.new_packet(FlowId(0), src, dst, 0.0);
        let mut out = WalkOutcome {
            delivered: false,
            drop: None,
            forwards: 0,
            backtracks: 0,
            path: vec![src],
            ell: None,
            trace: Vec::new(),
            packet: p.clone(),
        };
        let mut at = src;
        for _ in 0..=self.graph.len() {
            match gf_forward(&p, &self.states[at.0]).action {
                Action::Forward(u) => {
                    out.forwards += 1;
                    at = u;
                    out.path.push(u);
                }
                Action::Deliver => {
                    out.delivered = true;
                    break;
                }
                Action::Drop(r) => {
                    out.drop = Some(r);
                    break;
                }
                Action::Backtrack(_) => unreachable!("greedy forwarding never backtracks"),
            }
        }
        out
    }
}
