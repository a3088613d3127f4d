//! Maximum capacity routing: flood a bounded region for node state, then
//! source-route along the widest path.

use std::collections::{BinaryHeap, VecDeque};

use crate::ellipse::EllipseModel;
use crate::error::Result;
use crate::geometry::{Ellipse, NetworkGraph, NodeId};

/// Widest path from `s` to `d`: maximizes the smallest residual capacity
/// over relay nodes (endpoints excluded), then minimizes hop count, then
/// takes the lexicographically smallest node sequence. Only relays with
/// `allowed[v]` may be used.
pub fn widest_path(g: &NetworkGraph, capacity: &[f64], allowed: &[bool], s: NodeId, d: NodeId) -> Option<Vec<NodeId>> {
    if s == d {
        return Some(vec![s]);
    }
    let bottleneck = max_bottleneck(g, capacity, allowed, s, d)?;
    let relay_ok = |v: NodeId| allowed[v.0] && capacity[v.0] >= bottleneck;

    // hop distance to d through eligible relays only
    let mut hops = vec![usize::MAX; g.len()];
    let mut queue = VecDeque::new();
    hops[d.0] = 0;
    queue.push_back(d);
    while let Some(x) = queue.pop_front() {
        if x != d && !relay_ok(x) {
            continue;
        }
        for &y in g.neighbors(x) {
            if hops[y.0] == usize::MAX && (y == s || relay_ok(y)) {
                hops[y.0] = hops[x.0] + 1;
                queue.push_back(y);
            }
        }
    }
    if hops[s.0] == usize::MAX {
        return None;
    }
    let mut path = vec![s];
    let mut cur = s;
    while cur != d {
        let want = hops[cur.0] - 1;
        cur = *g
            .neighbors(cur)
            .iter()
            .find(|&&u| hops[u.0] == want && (u == d || relay_ok(u)))
            .expect("hop labels are consistent");
        path.push(cur);
    }
    Some(path)
}

#[derive(Clone, Copy, PartialEq)]
struct Widest {
    width: f64,
    node: NodeId,
}

impl Eq for Widest {}
impl PartialOrd for Widest {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Widest {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.width
            .total_cmp(&other.width)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Largest achievable minimum relay capacity; infinite for a direct link.
fn max_bottleneck(g: &NetworkGraph, capacity: &[f64], allowed: &[bool], s: NodeId, d: NodeId) -> Option<f64> {
    let mut best = vec![f64::NEG_INFINITY; g.len()];
    let mut done = vec![false; g.len()];
    let mut heap = BinaryHeap::new();
    best[s.0] = f64::INFINITY;
    heap.push(Widest {
        width: f64::INFINITY,
        node: s,
    });
    while let Some(Widest { width, node }) = heap.pop() {
        if done[node.0] {
            continue;
        }
        done[node.0] = true;
        if node == d {
            return Some(width);
        }
        if node != s && !allowed[node.0] {
            continue;
        }
        let through = if node == s { width } else { width.min(capacity[node.0]) };
        for &u in g.neighbors(node) {
            if !done[u.0] && through > best[u.0] {
                best[u.0] = through;
                heap.push(Widest { width: through, node: u });
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct McrRoute {
    /// Source route, or `None` if the region holds no path.
    pub path: Option<Vec<NodeId>>,
    /// Control-channel slots consumed by the state-collection flood.
    pub exploration_slots: u64,
    /// Nodes reached by the flood.
    pub region_size: usize,
}

/// Floods the ellipse predicted for connectivity, collects node capacities
/// and computes the widest path over the reached region.
///
/// Every reached node rebroadcasts the query once and its reply travels
/// back to the source hop by hop; each of those control transmissions
/// occupies one slot.
pub fn mcr_setup(
    g: &NetworkGraph,
    capacity: &[f64],
    model: &EllipseModel,
    rho: f64,
    s: NodeId,
    d: NodeId,
) -> Result<McrRoute> {
    g.check_node(s)?;
    g.check_node(d)?;
    let (ps, pd) = (*g.position(s), *g.position(d));
    let region = if ps == pd {
        Ellipse::unbounded(ps, pd)
    } else {
        let factor = model.predict_l_con(rho, ps.dist(&pd) / g.radius())?;
        Ellipse::new(ps, pd, factor)?
    };
    let inside: Vec<bool> = g.positions().iter().map(|p| region.contains(p)).collect();

    let mut depth = vec![usize::MAX; g.len()];
    let mut queue = VecDeque::new();
    depth[s.0] = 0;
    queue.push_back(s);
    while let Some(x) = queue.pop_front() {
        for &y in g.neighbors(x) {
            if inside[y.0] && depth[y.0] == usize::MAX {
                depth[y.0] = depth[x.0] + 1;
                queue.push_back(y);
            }
        }
    }
    let reached: Vec<bool> = depth.iter().map(|&h| h != usize::MAX).collect();
    let region_size = reached.iter().filter(|&&r| r).count();
    let replies: usize = depth.iter().filter(|&&h| h != usize::MAX).sum();
    let exploration_slots = (region_size + replies) as u64;

    let path = if reached[d.0] {
        widest_path(g, capacity, &reached, s, d)
    } else {
        None
    };
    Ok(McrRoute {
        path,
        exploration_slots,
        region_size,
    })
}
