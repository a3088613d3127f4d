//! Random-waypoint mobility inside the deployment square.

use rand::Rng;

use crate::geometry::Point;
use crate::seed::{rng_from_seed, SimRng};

#[derive(Debug, Clone)]
pub struct RandomWaypoint {
    /// Speed in km/s.
    pub speed: f64,
    /// Side of the deployment square in km.
    pub side: f64,
    pub waypoints: Vec<Point>,
    rng: SimRng,
}

impl RandomWaypoint {
    /// `speed_mps` in m/s; every node starts with a uniform waypoint.
    pub fn new(speed_mps: f64, side: f64, nodes: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let waypoints = (0..nodes).map(|_| uniform_point(&mut rng, side)).collect();
        RandomWaypoint {
            speed: speed_mps / 1000.0,
            side,
            waypoints,
            rng,
        }
    }

    pub fn with_waypoints(speed_mps: f64, side: f64, waypoints: Vec<Point>, seed: u64) -> Self {
        RandomWaypoint {
            speed: speed_mps / 1000.0,
            side,
            waypoints,
            rng: rng_from_seed(seed),
        }
    }
}

fn uniform_point(rng: &mut SimRng, side: f64) -> Point {
    Point::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side)
}

/// Advances every node `dt` seconds toward its waypoint. A node that
/// reaches its waypoint mid-step draws a new one and spends the rest of the
/// step moving toward it.
pub fn move_nodes(positions: &mut [Point], mobility: &mut RandomWaypoint, dt: f64) {
    if mobility.speed <= 0.0 || dt <= 0.0 {
        return;
    }
    let side = mobility.side;
    for (pos, wp) in positions.iter_mut().zip(mobility.waypoints.iter_mut()) {
        let mut left = mobility.speed * dt;
        // a few legs at most per step; the cap guards degenerate squares
        for _ in 0..64 {
            let d = pos.dist(wp);
            if d > left {
                let t = left / d;
                *pos = Point::new(pos.x + (wp.x - pos.x) * t, pos.y + (wp.y - pos.y) * t);
                break;
            }
            *pos = *wp;
            left -= d;
            *wp = uniform_point(&mut mobility.rng, side);
            if left <= 0.0 {
                break;
            }
        }
        pos.x = pos.x.clamp(0.0, side);
        pos.y = pos.y.clamp(0.0, side);
    }
}
