//! QF-Geo: depth-first forwarding bounded by a capacity-sized ellipse.
//!
//! A node holding a packet considers neighbors inside the packet's ellipse
//! that the packet has not visited. Those with enough residual capacity
//! (and not backtracked or demoted for this flow) are preferred; among them
//! the flow's last forwarder is reused with probability `1 - epsilon`, else
//! the one closest to the destination is taken and remembered. Without any
//! preferred candidate, the closest unvisited in-ellipse neighbor is used.
//! With no unvisited neighbor left the packet goes back to its traversal
//! parent.
//!
//! A node marks itself visited as soon as it handles the packet, so every
//! node is entered at most once per packet and the walk is a proper DFS.

use std::collections::BTreeSet;

use super::{closest_to, Action, DropReason, ForwardDecision, NodeState, Packet, ProtocolParams};
use crate::geometry::{Ellipse, NodeId};

/// Handles a packet arriving at (or created by) node `v`.
///
/// At the source, and at a relay whose retransmissions for this packet
/// exceeded the limit, the ellipse is recomputed with foci `(v, dst)` and
/// factor `l_cap(rho, |v dst|, phi)`.
pub fn qfgeo_on_packet(
    p: &mut Packet,
    v: &mut NodeState,
    params: &ProtocolParams,
    phi: f64,
    rnd: f64,
) -> ForwardDecision {
    if v.id == p.dst {
        p.visited.insert(v.id);
        return ForwardDecision::plain(Action::Deliver);
    }
    p.visited.insert(v.id);
    if p.visited.len() > params.header_cap {
        return ForwardDecision::plain(Action::Drop(DropReason::HeaderOverflow));
    }

    let exceeded = v.retx_of(p.id) > params.retx_max;
    let recompute = v.id == p.src || exceeded || p.ellipse.is_none();
    if recompute {
        p.ellipse = Some(capacity_ellipse(p, v, params, phi));
        if exceeded {
            v.retx.insert(p.id, 0);
        }
    }
    let mut decision = qfgeo_forward(p, v, params, rnd);
    decision.ell_recomputed = recompute;
    decision
}

fn capacity_ellipse(p: &Packet, v: &NodeState, params: &ProtocolParams, phi: f64) -> Ellipse {
    let focus = v.position;
    let delta = focus.dist(&p.dst_pos);
    if params.unbounded || phi <= 0.0 || delta == 0.0 {
        return Ellipse::unbounded(focus, p.dst_pos);
    }
    let factor = params
        .model
        .predict_l_cap(params.rho, delta, phi.min(1.0))
        .unwrap_or(f64::INFINITY);
    Ellipse {
        a: focus,
        b: p.dst_pos,
        factor,
    }
}

/// One forwarding step at `v`; `p.ellipse` must already be set.
pub fn qfgeo_forward(p: &mut Packet, v: &mut NodeState, params: &ProtocolParams, rnd: f64) -> ForwardDecision {
    let ellipse = p.ellipse.unwrap_or_else(|| Ellipse::unbounded(v.position, p.dst_pos));
    let empty = BTreeSet::new();
    let backtracked = v.backtrack_sets.get(&p.id).unwrap_or(&empty);
    let demoted = v.demoted.get(&p.flow).unwrap_or(&empty);

    let unvisited: Vec<_> = v
        .neighbors
        .iter()
        .filter(|(u, e)| !p.visited.contains(u) && ellipse.contains(&e.position))
        .collect();
    let preferred: Vec<_> = unvisited
        .iter()
        .filter(|(u, e)| !backtracked.contains(u) && !demoted.contains(u) && e.theta >= p.capacity_req)
        .collect();

    let mut decision = ForwardDecision::plain(Action::Drop(DropReason::Exhausted));
    let target = if !preferred.is_empty() {
        let memory = v.last_forwarder.get(&p.flow).copied();
        let exploit = rnd < 1.0 - params.epsilon;
        decision.explored = !exploit;
        match memory {
            Some(q) if exploit && preferred.iter().any(|(u, _)| **u == q) => {
                decision.used_memory = true;
                Some(q)
            }
            _ => {
                let u = closest_to(preferred.iter().map(|(u, e)| (**u, &e.position)), &p.dst_pos);
                if let Some(u) = u {
                    v.last_forwarder.insert(p.flow, u);
                }
                u
            }
        }
    } else if !unvisited.is_empty() {
        let u = closest_to(unvisited.iter().map(|(u, e)| (**u, &e.position)), &p.dst_pos);
        if let Some(u) = u {
            v.last_forwarder.insert(p.flow, u);
        }
        u
    } else {
        None
    };

    match target {
        Some(u) => {
            p.parent_of.insert(u, v.id);
            p.visited.insert(v.id);
            decision.action = Action::Forward(u);
        }
        None => {
            decision.action = match p.parent_of.get(&v.id) {
                Some(&parent) => Action::Backtrack(parent),
                None => Action::Drop(DropReason::Exhausted),
            };
        }
    }
    decision
}

/// Bookkeeping at `u` when `from` returned packet `p` to it.
pub fn on_backtrack_received(u: &mut NodeState, p: &Packet, from: NodeId) {
    u.backtrack_sets.entry(p.id).or_default().insert(from);
    u.demoted.entry(p.flow).or_default().insert(from);
    if u.last_forwarder.get(&p.flow) == Some(&from) {
        u.last_forwarder.remove(&p.flow);
    }
}

/// Called after a failed transmission of `p` from `v` to `target`.
///
/// Returns `None` to retry the same target, or a new decision once the
/// retransmission limit is exceeded: the failed target is excluded from the
/// preferred set and the ellipse is recomputed around `v`.
pub fn qfgeo_on_tx_failure(
    p: &mut Packet,
    v: &mut NodeState,
    target: NodeId,
    params: &ProtocolParams,
    phi: f64,
    rnd: f64,
) -> Option<ForwardDecision> {
    let retx = v.retx.entry(p.id).or_insert(0);
    *retx += 1;
    if *retx <= params.retx_max {
        return None;
    }
    let reroutes = v.reroutes.entry(p.id).or_insert(0);
    *reroutes += 1;
    if *reroutes > params.max_reroutes {
        return Some(ForwardDecision::plain(Action::Drop(DropReason::RetxExceeded)));
    }
    v.backtrack_sets.entry(p.id).or_default().insert(target);
    if v.last_forwarder.get(&p.flow) == Some(&target) {
        v.last_forwarder.remove(&p.flow);
    }
    // the failed hop never received the packet
    if p.parent_of.get(&target) == Some(&v.id) {
        p.parent_of.remove(&target);
    }
    Some(qfgeo_on_packet(p, v, params, phi, rnd))
}
