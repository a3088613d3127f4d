#![allow(dead_code)]

use std::collections::VecDeque;

use qfgeo_core::geometry::{generate_network, DensitySpec, Ellipse, NetworkGraph, NodeId, Point};
use qfgeo_core::protocol::walk::{StaticNetwork, WalkOutcome};
use qfgeo_core::protocol::{FlowId, ProtocolParams};
use qfgeo_core::seed::{derive_seed, rng_from_seed};
use rand::Rng;

/// Nodes reachable from `s` without leaving the ellipse.
pub fn reachable_in(g: &NetworkGraph, e: &Ellipse, s: NodeId) -> Vec<bool> {
    let mut seen = vec![false; g.len()];
    seen[s.0] = true;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &u in g.neighbors(v) {
            if !seen[u.0] && e.contains(g.position(u)) {
                seen[u.0] = true;
                q.push_back(u);
            }
        }
    }
    seen
}

pub struct DfsInstance {
    pub graph: NetworkGraph,
    pub src: NodeId,
    pub dst: NodeId,
    pub outcome: WalkOutcome,
}

impl DfsInstance {
    /// A random static lossless instance with random capacities.
    pub fn random(master: u64, index: u64) -> Self {
        let mut rng = rng_from_seed(derive_seed(master, &[index]));
        let n = rng.gen_range(5..=50);
        let rho = rng.gen_range(std::f64::consts::SQRT_2..=5.0);
        let graph = generate_network(DensitySpec { n, rho }, rng.gen()).unwrap();
        let src = NodeId(rng.gen_range(0..n));
        let dst = NodeId((src.0 + rng.gen_range(1..n)) % n);
        let theta: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let params = ProtocolParams {
            rho,
            unbounded: rng.gen_bool(0.1),
            ..ProtocolParams::default()
        };
        let capacity_req = rng.gen();
        let mut net = StaticNetwork::new(&graph, &theta, params);
        let outcome = net.route_qfgeo(FlowId(0), src, dst, capacity_req, &mut rng);
        DfsInstance {
            graph,
            src,
            dst,
            outcome,
        }
    }

    pub fn ellipse(&self) -> Ellipse {
        self.outcome.packet.ellipse.expect("source sets the ellipse")
    }

    /// `None` if the instance respects the DFS guarantees, else a reason.
    pub fn violation(&self) -> Option<String> {
        let e = self.ellipse();
        let in_ellipse = self.graph.node_ids().filter(|v| e.contains(self.graph.position(*v))).count();
        let reachable = reachable_in(&self.graph, &e, self.src)[self.dst.0];
        let out = &self.outcome;
        if reachable && !out.delivered {
            return Some(format!("reachable but dropped: {:?}", out.drop));
        }
        if !reachable && out.delivered {
            return Some("delivered outside the ellipse subgraph".into());
        }
        if out.hops() > 2 * in_ellipse {
            return Some(format!("{} hops over {in_ellipse} ellipse nodes", out.hops()));
        }
        if out.path.iter().any(|v| !e.contains(self.graph.position(*v))) {
            return Some("left the ellipse".into());
        }
        if out.path.windows(2).any(|w| !self.graph.are_adjacent(w[0], w[1])) {
            return Some("hop between non-neighbors".into());
        }
        None
    }
}

// Brute-force oracles.

pub fn random_graph(n: usize, side: f64, seed: u64) -> NetworkGraph {
    let mut rng = rng_from_seed(seed);
    let pts = (0..n)
        .map(|_| Point::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side))
        .collect();
    NetworkGraph::from_points(pts).unwrap()
}

/// Points on a half-unit lattice, which produces many equal-length paths.
pub fn lattice_graph(n: usize, seed: u64) -> NetworkGraph {
    let mut rng = rng_from_seed(seed);
    let mut pts: Vec<Point> = Vec::new();
    while pts.len() < n {
        let p = Point::new(rng.gen_range(0..6) as f64 * 0.5, rng.gen_range(0..6) as f64 * 0.5);
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    NetworkGraph::from_points(pts).unwrap()
}

pub fn simple_paths(g: &NetworkGraph, s: NodeId, d: NodeId) -> Vec<Vec<NodeId>> {
    fn go(g: &NetworkGraph, d: NodeId, path: &mut Vec<NodeId>, on: &mut [bool], out: &mut Vec<Vec<NodeId>>) {
        let v = *path.last().unwrap();
        if v == d {
            out.push(path.clone());
            return;
        }
        for &u in g.neighbors(v) {
            if !on[u.0] {
                on[u.0] = true;
                path.push(u);
                go(g, d, path, on, out);
                path.pop();
                on[u.0] = false;
            }
        }
    }
    let mut on = vec![false; g.len()];
    on[s.0] = true;
    let mut out = Vec::new();
    go(g, d, &mut vec![s], &mut on, &mut out);
    out
}

pub fn length(g: &NetworkGraph, p: &[NodeId]) -> f64 {
    p.windows(2).map(|w| g.dist(w[0], w[1])).sum()
}

/// Canonical-form membership: rotate into the ellipse frame and test
/// `(x/a)^2 + (y/b)^2 <= 1`.
pub fn canonical_contains(s: Point, d: Point, ell: f64, u: Point) -> f64 {
    let c = s.dist(&d) / 2.0;
    let a = ell * c;
    let b = (a * a - c * c).sqrt();
    let (mx, my) = ((s.x + d.x) / 2.0, (s.y + d.y) / 2.0);
    let theta = (d.y - s.y).atan2(d.x - s.x);
    let (dx, dy) = (u.x - mx, u.y - my);
    let x = dx * theta.cos() + dy * theta.sin();
    let y = -dx * theta.sin() + dy * theta.cos();
    (x / a).powi(2) + (y / b).powi(2)
}

pub fn brute_widest(g: &NetworkGraph, cap: &[f64], s: NodeId, d: NodeId) -> Option<Vec<NodeId>> {
    let bottleneck = |p: &[NodeId]| {
        p[1..p.len() - 1]
            .iter()
            .map(|v| cap[v.0])
            .fold(f64::INFINITY, f64::min)
    };
    let paths = simple_paths(g, s, d);
    let best = paths.iter().map(|p| bottleneck(p)).max_by(f64::total_cmp)?;
    let widest: Vec<_> = paths.into_iter().filter(|p| bottleneck(p) == best).collect();
    let hops = widest.iter().map(Vec::len).min()?;
    widest.into_iter().filter(|p| p.len() == hops).min()
}

