//! Greedy geographic forwarding without hole recovery.

use super::{closest_to, Action, DropReason, ForwardDecision, NodeState, Packet};

/// Forwards to the neighbor closest to the destination among those strictly
/// closer than `v`; drops at a local minimum.
pub fn gf_forward(p: &Packet, v: &NodeState) -> ForwardDecision {
    if v.id == p.dst {
        return ForwardDecision::plain(Action::Deliver);
    }
    let own = v.position.dist(&p.dst_pos);
    let next = closest_to(
        v.neighbors
            .iter()
            .filter(|(_, e)| e.position.dist(&p.dst_pos) < own)
            .map(|(u, e)| (*u, &e.position)),
        &p.dst_pos,
    );
    ForwardDecision::plain(match next {
        Some(u) => Action::Forward(u),
        None => Action::Drop(DropReason::LocalMinimum),
    })
}
