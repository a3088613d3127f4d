//! Shared fixtures for the routing benchmarks.

use qfgeo_core::geometry::generate_network;
use qfgeo_core::{DensitySpec, NetworkGraph, NodeId};

/// A reproducible network and the endpoint pair farthest apart in it.
pub fn fixture(n: usize, rho: f64, seed: u64) -> (NetworkGraph, NodeId, NodeId) {
    let g = generate_network(DensitySpec { n, rho }, seed).expect("valid density");
    let corner = |sign: f64| {
        g.node_ids()
            .min_by(|&a, &b| {
                let ka = sign * (g.position(a).x + g.position(a).y);
                let kb = sign * (g.position(b).x + g.position(b).y);
                ka.total_cmp(&kb)
            })
            .expect("non-empty network")
    };
    let (s, d) = (corner(1.0), corner(-1.0));
    (g, s, d)
}
