//! The slot loop: mobility, beacons, traffic, CSMA and forwarding.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use super::channel::{covers, resolve_slot, Jammer, Transmission, TxOutcome};
use super::config::{FlowPlan, FlowSpec, NetworkSpec, TrialConfig};
use super::log::{Event, EventKind, EventLog};
use super::mobility::{move_nodes, RandomWaypoint};
use crate::error::{Error, Result};
use crate::geometry::{generate_network, NetworkGraph, NodeId, Point, BOUNDARY_EPS};
use crate::protocol::{
    estimate_phi, estimate_theta, gf_forward, mcr_setup, on_backtrack_received, qfgeo_on_packet, qfgeo_on_tx_failure,
    Action, DropReason, FlowId, ForwardDecision, NodeState, Packet, PacketId, ProtocolKind,
};
use crate::seed::{derive_seed, rng_from_seed, SimRng};

/// A packet waiting in a node's queue for its next transmission.
#[derive(Debug, Clone)]
pub struct Outgoing {
    pub packet: Packet,
    pub next_hop: NodeId,
    pub backtrack: bool,
}

/// Sliding window of per-slot occupancy shares.
#[derive(Debug, Clone)]
struct Window {
    samples: VecDeque<f64>,
    sum: f64,
    cap: usize,
}

impl Window {
    fn new(cap: usize) -> Self {
        Window {
            samples: VecDeque::with_capacity(cap),
            sum: 0.0,
            cap,
        }
    }

    fn push(&mut self, x: f64) {
        if self.samples.len() == self.cap {
            self.sum -= self.samples.pop_front().unwrap_or(0.0);
        }
        self.samples.push_back(x);
        self.sum += x;
    }

    fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            (self.sum / self.samples.len() as f64).clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimNode {
    pub state: NodeState,
    pub queues: BTreeMap<FlowId, VecDeque<Outgoing>>,
    /// Remaining backoff slots per radio.
    pub backoff: Vec<u32>,
    rr: usize,
    transmit: Window,
    sensed: Window,
    beacon_phase: u64,
}

impl SimNode {
    pub fn queued(&self) -> usize {
        self.queues.values().map(VecDeque::len).sum()
    }
}

#[derive(Debug, Clone)]
enum RouteStatus {
    /// Forwarding decides hop by hop.
    NotNeeded,
    Exploring { ready_at: u64, path: Option<Vec<NodeId>> },
    Ready(Vec<NodeId>),
    Failed,
}

#[derive(Debug, Clone)]
struct FlowRuntime {
    generated: u64,
    total: u64,
    route: RouteStatus,
    /// Packets generated while the route is being explored.
    held: Vec<Packet>,
}

/// Complete state of one trial between slots.
pub struct TrialState {
    pub config: TrialConfig,
    pub slot: u64,
    /// True positions in km.
    pub positions: Vec<Point>,
    pub nodes: Vec<SimNode>,
    pub flows: Vec<FlowSpec>,
    pub log: EventLog,
    pub jammer: Option<Jammer>,
    pub side: f64,
    flow_rt: Vec<FlowRuntime>,
    mobility: Option<RandomWaypoint>,
    mac_rng: SimRng,
    proto_rng: SimRng,
    next_packet: u64,
}

/// Distinct endpoints drawn uniformly for each flow.
fn random_flows(n: usize, count: usize, rng: &mut SimRng) -> Vec<(NodeId, NodeId)> {
    (0..count)
        .map(|_| {
            let s = rng.gen_range(0..n);
            let mut d = rng.gen_range(0..n - 1);
            if d >= s {
                d += 1;
            }
            (NodeId(s), NodeId(d))
        })
        .collect()
}

impl TrialState {
    pub fn new(config: TrialConfig) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let km = config.radius_km;
        let (positions, side) = match &config.network {
            NetworkSpec::Generated(spec) => {
                let g = generate_network(*spec, derive_seed(seed, &[0]))?;
                let pts: Vec<Point> = g.positions().iter().map(|p| Point::new(p.x * km, p.y * km)).collect();
                (pts, spec.side() * km)
            }
            NetworkSpec::Explicit(pts) => {
                let side = pts.iter().fold(0.0f64, |m, p| m.max(p.x).max(p.y));
                (pts.clone(), side)
            }
        };
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("node positions must be finite".into()));
        }
        let n = positions.len();
        let pairs = match &config.flows {
            FlowPlan::Random(k) => random_flows(n, *k, &mut rng_from_seed(derive_seed(seed, &[1]))),
            FlowPlan::Explicit(p) => p.clone(),
        };
        let capacity_req = config.capacity_req();
        let flows: Vec<FlowSpec> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(src, dst))| FlowSpec {
                id: FlowId(i as u32),
                src,
                dst,
                size_bits: config.flow_size_bits,
                packet_bits: config.packet_bits,
                capacity_req,
            })
            .collect();
        let flow_rt = flows
            .iter()
            .map(|f| FlowRuntime {
                generated: 0,
                total: f.packet_count(),
                route: RouteStatus::NotNeeded,
                held: Vec::new(),
            })
            .collect();

        let mut mac_rng = rng_from_seed(derive_seed(seed, &[3]));
        let hello = config.hello_slots();
        let nodes = positions
            .iter()
            .enumerate()
            .map(|(i, p)| SimNode {
                state: NodeState::new(NodeId(i), *p),
                queues: BTreeMap::new(),
                backoff: vec![0; config.radio.radios],
                rr: 0,
                transmit: Window::new(config.theta_window),
                sensed: Window::new(config.theta_window),
                beacon_phase: mac_rng.gen_range(0..hello),
            })
            .collect();
        let mobility = (config.mobility_mps > 0.0)
            .then(|| RandomWaypoint::new(config.mobility_mps, side, n, derive_seed(seed, &[2])));
        let jammer = config.jammer.map(|j| Jammer {
            position: j.position.unwrap_or(Point::new(side / 2.0, side / 2.0)),
            radius: j.radius_km,
            channel: j.channel,
        });
        Ok(TrialState {
            slot: 0,
            positions,
            nodes,
            flows,
            log: EventLog::default(),
            jammer,
            side,
            flow_rt,
            mobility,
            mac_rng,
            proto_rng: rng_from_seed(derive_seed(seed, &[4])),
            next_packet: 0,
            config,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.slot >= self.config.slots()
    }

    /// Snapshot of the true connectivity graph.
    pub fn graph(&self) -> Result<NetworkGraph> {
        NetworkGraph::with_radius(self.positions.clone(), self.config.radius_km)
    }

    fn in_range(&self, a: usize, b: usize) -> bool {
        self.positions[a].dist(&self.positions[b]) <= self.config.radius_km + BOUNDARY_EPS
    }

    fn beacons(&mut self, t: u64) {
        let hello = self.config.hello_slots();
        let mode = self.config.params.theta_mode;
        let timeout = hello * u64::from(self.config.neighbor_timeout_periods);
        for v in 0..self.nodes.len() {
            if t % hello != self.nodes[v].beacon_phase {
                continue;
            }
            let node = &mut self.nodes[v];
            node.state.theta = estimate_theta(node.transmit.mean(), node.sensed.mean(), mode);
            node.state.expire_neighbors(t.saturating_sub(timeout));
            let (pos, theta) = (self.positions[v], node.state.theta);
            for u in 0..self.nodes.len() {
                if u != v && self.in_range(u, v) {
                    self.nodes[u].state.set_neighbor(NodeId(v), pos, theta, t);
                }
            }
            let mut e = Event::new(t, EventKind::Beacon, v);
            e.ell = Some(theta);
            self.log.push(e);
        }
    }

    fn packet_event(&self, t: u64, kind: EventKind, node: usize, p: &Packet) -> Event {
        let mut e = Event::new(t, kind, node);
        e.packet = Some(p.id.0);
        e.flow = Some(p.flow.0);
        e.ell = p.ell();
        e
    }

    fn start_flows(&mut self, t: u64) {
        for i in 0..self.flows.len() {
            let f = self.flows[i].clone();
            let mut e = Event::new(t, EventKind::FlowStart, f.src.0);
            e.target = Some(f.dst.0);
            e.flow = Some(f.id.0);
            self.log.push(e);
            if self.config.protocol != ProtocolKind::Mcr {
                continue;
            }
            let capacity: Vec<f64> = self.nodes.iter().map(|n| n.state.theta).collect();
            let route = self.graph().and_then(|g| {
                mcr_setup(
                    &g,
                    &capacity,
                    &self.config.params.model,
                    self.config.params.rho,
                    f.src,
                    f.dst,
                )
            });
            let (slots, path, region) = match route {
                Ok(r) => (r.exploration_slots, r.path, r.region_size),
                Err(_) => (0, None, 0),
            };
            let mut e = Event::new(t, EventKind::Explore, f.src.0);
            e.flow = Some(f.id.0);
            e.retx = slots.min(u64::from(u32::MAX)) as u32;
            e.detail = format!("region={region}");
            self.log.push(e);
            self.flow_rt[i].route = RouteStatus::Exploring {
                ready_at: t + slots,
                path,
            };
        }
    }

    fn settle_routes(&mut self, t: u64) {
        for i in 0..self.flows.len() {
            let RouteStatus::Exploring { ready_at, path } = &self.flow_rt[i].route else {
                continue;
            };
            if t < *ready_at {
                continue;
            }
            let src = self.flows[i].src.0;
            let path = path.clone();
            let mut e = Event::new(t, EventKind::RouteReady, src);
            e.flow = Some(self.flows[i].id.0);
            let held = std::mem::take(&mut self.flow_rt[i].held);
            match path {
                Some(path) => {
                    e.detail = format!("hops={}", path.len() - 1);
                    self.log.push(e);
                    self.flow_rt[i].route = RouteStatus::Ready(path);
                    for p in held {
                        self.at_source(t, i, p);
                    }
                }
                None => {
                    e.kind = EventKind::RouteFailed;
                    self.log.push(e);
                    self.flow_rt[i].route = RouteStatus::Failed;
                    for p in held {
                        self.drop_packet(t, src, &p, DropReason::NoRoute);
                    }
                }
            }
        }
    }

    fn generate(&mut self, t: u64) {
        if t < self.config.arrival_slot() {
            return;
        }
        for i in 0..self.flows.len() {
            let rt = &mut self.flow_rt[i];
            if rt.generated >= rt.total {
                continue;
            }
            rt.generated += 1;
            let f = &self.flows[i];
            let mut p = Packet::new(PacketId(self.next_packet), f.id, f.src, f.dst, self.positions[f.dst.0]);
            self.next_packet += 1;
            p.capacity_req = f.capacity_req;
            p.payload_bits = f.packet_bits;
            p.created_slot = t;
            let ev = self.packet_event(t, EventKind::Generate, f.src.0, &p);
            self.log.push(ev);
            match &self.flow_rt[i].route {
                RouteStatus::Exploring { .. } => self.flow_rt[i].held.push(p),
                _ => self.at_source(t, i, p),
            }
        }
    }

    fn at_source(&mut self, t: u64, flow_index: usize, mut p: Packet) {
        let src = self.flows[flow_index].src.0;
        match &self.flow_rt[flow_index].route {
            RouteStatus::Failed => {
                self.drop_packet(t, src, &p, DropReason::NoRoute);
                return;
            }
            RouteStatus::Ready(path) => p.route = Some(path.clone()),
            _ => {}
        }
        self.handle(t, src, p, None);
    }

    fn drop_packet(&mut self, t: u64, node: usize, p: &Packet, reason: DropReason) {
        let mut e = self.packet_event(t, EventKind::Drop, node, p);
        e.detail = reason.as_str().to_string();
        self.log.push(e);
        self.nodes[node].state.packet_sent(p.id);
    }

    fn decide(&mut self, v: usize, p: &mut Packet, backtracked_from: Option<NodeId>) -> ForwardDecision {
        let params = self.config.params;
        let state = &mut self.nodes[v].state;
        match self.config.protocol {
            ProtocolKind::QfGeo => {
                if let Some(from) = backtracked_from {
                    on_backtrack_received(state, p, from);
                }
                let phi = estimate_phi(&state.neighbor_thetas(), params.c_min);
                qfgeo_on_packet(p, state, &params, phi, self.proto_rng.gen())
            }
            ProtocolKind::Gf => gf_forward(p, state),
            ProtocolKind::Mcr => {
                let id = NodeId(v);
                let action = if id == p.dst {
                    Action::Deliver
                } else {
                    let route = p.route.as_deref().unwrap_or(&[]);
                    match route.iter().position(|&x| x == id) {
                        Some(i) if i + 1 < route.len() => Action::Forward(route[i + 1]),
                        _ => Action::Drop(DropReason::NoRoute),
                    }
                };
                ForwardDecision::plain(action)
            }
        }
    }

    /// Runs the protocol at `v` for a packet it just created or received.
    fn handle(&mut self, t: u64, v: usize, mut p: Packet, backtracked_from: Option<NodeId>) {
        // location service: the destination's current position
        p.dst_pos = self.positions[p.dst.0];
        let decision = self.decide(v, &mut p, backtracked_from);
        self.apply(t, v, p, decision);
    }

    fn apply(&mut self, t: u64, v: usize, p: Packet, decision: ForwardDecision) {
        match decision.action {
            Action::Forward(u) | Action::Backtrack(u) => {
                let backtrack = matches!(decision.action, Action::Backtrack(_));
                let kind = if backtrack {
                    EventKind::Backtrack
                } else {
                    EventKind::Forward
                };
                let mut e = self.packet_event(t, kind, v, &p);
                e.target = Some(u.0);
                if decision.ell_recomputed {
                    e.detail = "ell".into();
                }
                self.log.push(e);
                self.nodes[v].queues.entry(p.flow).or_default().push_back(Outgoing {
                    packet: p,
                    next_hop: u,
                    backtrack,
                });
            }
            Action::Deliver => {
                let e = self.packet_event(t, EventKind::Deliver, v, &p);
                self.log.push(e);
            }
            Action::Drop(reason) => self.drop_packet(t, v, &p, reason),
        }
    }

    /// Packets each node offers this slot, one per free radio, round-robin
    /// over its flows.
    fn pick_candidates(&mut self) -> Vec<(usize, usize, FlowId, PacketId, NodeId)> {
        let mut out = Vec::new();
        for (v, node) in self.nodes.iter_mut().enumerate() {
            let free: Vec<usize> = node
                .backoff
                .iter_mut()
                .enumerate()
                .filter_map(|(r, b)| {
                    if *b > 0 {
                        *b -= 1;
                        None
                    } else {
                        Some(r)
                    }
                })
                .collect();
            let active: Vec<FlowId> = node
                .queues
                .iter()
                .filter(|(_, q)| !q.is_empty())
                .map(|(f, _)| *f)
                .collect();
            if free.is_empty() || active.is_empty() {
                continue;
            }
            let start = node.rr % active.len();
            node.rr = node.rr.wrapping_add(1);
            let mut radios = free.into_iter();
            'fill: for depth in 0.. {
                let mut any = false;
                for k in 0..active.len() {
                    let f = active[(start + k) % active.len()];
                    if let Some(o) = node.queues[&f].get(depth) {
                        any = true;
                        match radios.next() {
                            Some(r) => out.push((v, r, f, o.packet.id, o.next_hop)),
                            None => break 'fill,
                        }
                    }
                }
                if !any {
                    break;
                }
            }
        }
        out
    }

    fn backoff(&mut self, v: usize, radio: usize) {
        let max = self.config.backoff_max_slots;
        self.nodes[v].backoff[radio] = self.mac_rng.gen_range(0..=max);
    }

    fn transmit(&mut self, t: u64) {
        let mut candidates = self.pick_candidates();
        candidates.shuffle(&mut self.mac_rng);
        let channels = self.config.radio.data_channels;
        let mut txs: Vec<Transmission> = Vec::new();
        let mut meta = Vec::new();
        for (v, radio, flow, pid, target) in candidates {
            let jammed_here = self.jammer.filter(|j| covers(j, &self.positions[v]));
            let idle = (0..channels as u8).find(|&c| {
                jammed_here.is_none_or(|j| j.channel != c)
                    && !txs
                        .iter()
                        .any(|o| o.channel == c && (o.sender == v || self.in_range(o.sender, v)))
            });
            match idle {
                Some(c) => {
                    txs.push(Transmission {
                        sender: v,
                        receiver: target.0,
                        channel: c,
                    });
                    meta.push((radio, flow, pid));
                }
                None => self.backoff(v, radio),
            }
        }

        let outcomes = resolve_slot(&txs, &self.positions, self.config.radius_km, self.jammer.as_ref());
        self.record_occupancy(&txs);

        for ((tx, (radio, flow, pid)), outcome) in txs.iter().zip(meta).zip(outcomes) {
            let v = tx.sender;
            let Some(idx) = self.nodes[v].queues[&flow].iter().position(|o| o.packet.id == pid) else {
                continue;
            };
            let out = &self.nodes[v].queues[&flow][idx];
            let mut send = self.packet_event(t, EventKind::Send, v, &out.packet);
            send.target = Some(tx.receiver);
            send.channel = Some(tx.channel);
            send.retx = self.nodes[v].state.retx_of(pid);
            let mut result = send.clone();
            self.log.push(send);
            result.kind = match outcome {
                TxOutcome::Received => EventKind::Receive,
                TxOutcome::Collision => EventKind::Collision,
                TxOutcome::Jammed => EventKind::Jammed,
                TxOutcome::OutOfRange => {
                    result.detail = "out_of_range".into();
                    EventKind::Lost
                }
                TxOutcome::ReceiverBusy => {
                    result.detail = "receiver_busy".into();
                    EventKind::Lost
                }
            };
            self.log.push(result);

            if outcome == TxOutcome::Received {
                let out = self.nodes[v].queues.get_mut(&flow).and_then(|q| q.remove(idx));
                let Some(out) = out else { continue };
                self.nodes[v].state.packet_sent(pid);
                let mut p = out.packet;
                p.hops += 1;
                let from = out.backtrack.then_some(NodeId(v));
                self.handle(t, tx.receiver, p, from);
            } else {
                self.backoff(v, radio);
                self.on_failure(t, v, flow, idx);
            }
        }
    }

    fn record_occupancy(&mut self, txs: &[Transmission]) {
        let channels = self.config.radio.data_channels as f64;
        for v in 0..self.nodes.len() {
            let own = txs.iter().filter(|o| o.sender == v).count() as f64;
            let mut busy = 0usize;
            for c in 0..self.config.radio.data_channels as u8 {
                let jammed = self
                    .jammer
                    .is_some_and(|j| j.channel == c && covers(&j, &self.positions[v]));
                let foreign = txs
                    .iter()
                    .any(|o| o.channel == c && o.sender != v && self.in_range(o.sender, v));
                if jammed || foreign {
                    busy += 1;
                }
            }
            let node = &mut self.nodes[v];
            node.transmit.push(own / channels);
            node.sensed.push(busy as f64 / channels);
        }
    }

    fn on_failure(&mut self, t: u64, v: usize, flow: FlowId, idx: usize) {
        let params = self.config.params;
        let rnd: f64 = self.proto_rng.gen();
        let protocol = self.config.protocol;
        let node = &mut self.nodes[v];
        let Some(queue) = node.queues.get_mut(&flow) else { return };
        let out = &mut queue[idx];
        let pid = out.packet.id;
        let decision = match protocol {
            ProtocolKind::QfGeo => {
                let phi = estimate_phi(&node.state.neighbor_thetas(), params.c_min);
                qfgeo_on_tx_failure(&mut out.packet, &mut node.state, out.next_hop, &params, phi, rnd)
            }
            ProtocolKind::Gf | ProtocolKind::Mcr => {
                let r = node.state.retx.entry(pid).or_insert(0);
                *r += 1;
                (*r > params.retx_max).then(|| ForwardDecision::plain(Action::Drop(DropReason::RetxExceeded)))
            }
        };
        let Some(decision) = decision else { return };
        match decision.action {
            Action::Forward(u) | Action::Backtrack(u) => {
                out.next_hop = u;
                out.backtrack = matches!(decision.action, Action::Backtrack(_));
                let kind = if out.backtrack {
                    EventKind::Backtrack
                } else {
                    EventKind::Forward
                };
                let p = out.packet.clone();
                let mut e = self.packet_event(t, kind, v, &p);
                e.target = Some(u.0);
                e.detail = "reroute".into();
                self.log.push(e);
            }
            Action::Deliver | Action::Drop(_) => {
                let out = queue.remove(idx).expect("index is valid");
                self.apply(t, v, out.packet, decision);
            }
        }
    }

    /// Resolves one slot and advances the clock.
    pub fn step_slot(&mut self) {
        let t = self.slot;
        if let Some(m) = self.mobility.as_mut() {
            move_nodes(&mut self.positions, m, self.config.slot_s);
            for (node, p) in self.nodes.iter_mut().zip(&self.positions) {
                node.state.position = *p;
            }
        }
        self.beacons(t);
        if t == self.config.arrival_slot() {
            self.start_flows(t);
        }
        self.settle_routes(t);
        self.generate(t);
        self.transmit(t);
        self.slot += 1;
    }
}
