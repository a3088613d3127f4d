//! Planar geometry and unit-disk graphs.
//!
//! All lengths are expressed in units of the transmission radius `R`, so a
//! link exists between two nodes iff their distance is at most `1.0`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, SimRng};

/// Slack used for inclusive boundary tests on floating point sums.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    #[inline]
    pub fn dist_sq(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Node count and density of a uniform deployment.
///
/// Density is the expected number of nodes per `R²` of area, so the square
/// side is `sqrt(n / rho)` in units of `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub n: usize,
    pub rho: f64,
}

impl DensitySpec {
    pub fn new(n: usize, rho: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 nodes, got {n}")));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::invalid(format!("density must be positive, got {rho}")));
        }
        Ok(DensitySpec { n, rho })
    }

    pub fn side(&self) -> f64 {
        (self.n as f64 / self.rho).sqrt()
    }
}

/// An ellipse with foci `a` and `b` whose major axis is `factor * |ab|`.
///
/// An infinite factor describes the whole plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub a: Point,
    pub b: Point,
    pub factor: f64,
}

impl Ellipse {
    pub fn new(a: Point, b: Point, factor: f64) -> Result<Self> {
        if a == b {
            return Err(Error::ZeroDistance);
        }
        if factor.is_nan() || factor < 1.0 {
            return Err(Error::invalid(format!("ellipse factor must be >= 1, got {factor}")));
        }
        Ok(Ellipse { a, b, factor })
    }

    pub fn unbounded(a: Point, b: Point) -> Self {
        Ellipse {
            a,
            b,
            factor: f64::INFINITY,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.factor.is_infinite()
    }

    pub fn focal_distance(&self) -> f64 {
        self.a.dist(&self.b)
    }

    /// Boundary inclusive, up to [`BOUNDARY_EPS`] of relative slack.
    #[inline]
    pub fn contains(&self, u: &Point) -> bool {
        if self.is_unbounded() {
            return true;
        }
        let limit = self.factor * self.focal_distance();
        self.a.dist(u) + u.dist(&self.b) <= limit + BOUNDARY_EPS * (1.0 + limit)
    }
}

/// Whether `u` lies in the ellipse with foci `src`, `dst` and factor `ell`.
pub fn ellipse_contains(src: Point, dst: Point, ell: f64, u: Point) -> Result<bool> {
    Ok(Ellipse::new(src, dst, ell)?.contains(&u))
}

/// Smallest ellipse factor, with foci `src` and `dst`, whose ellipse covers
/// every point in `points`.
pub fn path_ellipse_factor<'a, I>(points: I, src: Point, dst: Point) -> Result<f64>
where
    I: IntoIterator<Item = &'a Point>,
{
    let d = src.dist(&dst);
    if d == 0.0 {
        return Err(Error::ZeroDistance);
    }
    let mut worst: Option<f64> = None;
    for p in points {
        let ratio = (src.dist(p) + p.dist(&dst)) / d;
        worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
    }
    worst
        .map(|w| w.max(1.0))
        .ok_or_else(|| Error::invalid("empty path"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub nodes: Vec<NodeId>,
    /// Sum of Euclidean edge lengths, in units of `R`.
    pub length: f64,
}

impl PathRecord {
    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn ellipse_factor(&self, g: &NetworkGraph) -> Result<f64> {
        let (first, last) = match (self.nodes.first(), self.nodes.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(Error::invalid("empty path")),
        };
        path_ellipse_factor(
            self.nodes.iter().map(|v| g.position(*v)),
            *g.position(first),
            *g.position(last),
        )
    }
}

/// Unit-disk graph over a set of positioned nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    positions: Vec<Point>,
    adjacency: Vec<Vec<NodeId>>,
    radius: f64,
    /// Density and seed the graph was generated from, when known.
    pub meta: Option<(f64, u64)>,
}

impl NetworkGraph {
    /// Builds the unit-disk graph over `positions` with radius `1.0`.
    pub fn from_points(positions: Vec<Point>) -> Result<Self> {
        Self::with_radius(positions, 1.0)
    }

    pub fn with_radius(positions: Vec<Point>, radius: f64) -> Result<Self> {
        if let Some(p) = positions.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {p:?}")));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid("radius must be positive"));
        }
        let adjacency = unit_disk_adjacency(&positions, radius);
        Ok(NetworkGraph {
            positions,
            adjacency,
            radius,
            meta: None,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    #[inline]
    pub fn position(&self, v: NodeId) -> &Point {
        &self.positions[v.0]
    }

    /// Neighbors of `v` in ascending id order.
    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.adjacency[v.0]
    }

    pub fn are_adjacent(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency[u.0].binary_search(&v).is_ok()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.positions.len()).map(NodeId)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn dist(&self, u: NodeId, v: NodeId) -> f64 {
        self.positions[u.0].dist(&self.positions[v.0])
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.0 < self.positions.len() {
            Ok(())
        } else {
            Err(Error::UnknownNode(v.0))
        }
    }

    pub fn nodes_in_ellipse(&self, ellipse: &Ellipse) -> Vec<NodeId> {
        self.node_ids()
            .filter(|v| ellipse.contains(self.position(*v)))
            .collect()
    }

    /// Writes `n rho seed` followed by one `id x y` line per node.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let (rho, seed) = self.meta.unwrap_or((f64::NAN, 0));
        writeln!(w, "{} {} {}", self.len(), rho, seed)?;
        for (i, p) in self.positions.iter().enumerate() {
            writeln!(w, "{} {} {}", i, p.x, p.y)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`NetworkGraph::write_text`]. Lines
    /// starting with `#` are ignored. Adjacency is recomputed.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut header: Option<(usize, f64, u64)> = None;
        let mut positions = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::parse(lineno + 1, "expected 3 fields"));
            }
            let bad = |what: &str| Error::parse(lineno + 1, format!("bad {what}"));
            match header {
                None => {
                    let n = fields[0].parse().map_err(|_| bad("node count"))?;
                    let rho = fields[1].parse().map_err(|_| bad("density"))?;
                    let seed = fields[2].parse().map_err(|_| bad("seed"))?;
                    header = Some((n, rho, seed));
                }
                Some(_) => {
                    let id: usize = fields[0].parse().map_err(|_| bad("node id"))?;
                    if id != positions.len() {
                        return Err(Error::parse(lineno + 1, "node ids must be 0..n in order"));
                    }
                    let x = fields[1].parse().map_err(|_| bad("x"))?;
                    let y = fields[2].parse().map_err(|_| bad("y"))?;
                    positions.push(Point::new(x, y));
                }
            }
        }
        let (n, rho, seed) = header.ok_or_else(|| Error::parse(0, "missing header"))?;
        if positions.len() != n {
            return Err(Error::parse(
                0,
                format!("header says {n} nodes, found {}", positions.len()),
            ));
        }
        let mut g = NetworkGraph::from_points(positions)?;
        g.meta = Some((rho, seed));
        Ok(g)
    }
}

fn unit_disk_adjacency(positions: &[Point], radius: f64) -> Vec<Vec<NodeId>> {
    let r2 = radius * radius;
    let n = positions.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if positions[i].dist_sq(&positions[j]) <= r2 {
                adj[i].push(NodeId(j));
                adj[j].push(NodeId(i));
            }
        }
    }
    // i < j insertion order already yields ascending lists
    adj
}

/// Places `spec.n` nodes uniformly in the `side x side` square and links
/// every pair within distance `1.0`.
pub fn generate_network(spec: DensitySpec, seed: u64) -> Result<NetworkGraph> {
    let mut rng = rng_from_seed(seed);
    generate_network_with_rng(spec, seed, &mut rng)
}

/// Like [`generate_network`] but draws from a caller-owned stream, which
/// may be used afterwards for further sampling on the same network.
pub fn generate_network_with_rng(spec: DensitySpec, seed: u64, rng: &mut SimRng) -> Result<NetworkGraph> {
    let spec = DensitySpec::new(spec.n, spec.rho)?;
    let side = spec.side();
    let positions = (0..spec.n)
        .map(|_| Point::new(rng.gen::<f64>() * side, rng.gen::<f64>() * side))
        .collect();
    let mut g = NetworkGraph::from_points(positions)?;
    g.meta = Some((spec.rho, seed));
    Ok(g)
}

#[derive(Clone, Copy)]
struct HeapEntry {
    dist: f64,
    node: NodeId,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on node id
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Single-source Euclidean distances over the graph. Unreachable nodes get
/// `f64::INFINITY`.
pub fn euclidean_distances(g: &NetworkGraph, from: NodeId) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.len()];
    let mut heap = BinaryHeap::new();
    dist[from.0] = 0.0;
    heap.push(HeapEntry { dist: 0.0, node: from });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if d > dist[node.0] {
            continue;
        }
        for &u in g.neighbors(node) {
            let nd = d + g.dist(node, u);
            if nd < dist[u.0] {
                dist[u.0] = nd;
                heap.push(HeapEntry { dist: nd, node: u });
            }
        }
    }
    dist
}

/// Minimum total Euclidean length path from `s` to `d`.
///
/// Among equally short paths the lexicographically smallest node sequence
/// wins: distances are computed from `d`, then the path is walked from `s`
/// always taking the lowest-id neighbor that stays on a shortest path.
pub fn euclidean_shortest_path(g: &NetworkGraph, s: NodeId, d: NodeId) -> Result<Option<PathRecord>> {
    g.check_node(s)?;
    g.check_node(d)?;
    let to_dst = euclidean_distances(g, d);
    if to_dst[s.0].is_infinite() {
        return Ok(None);
    }
    let mut nodes = vec![s];
    let mut on_path = vec![false; g.len()];
    on_path[s.0] = true;
    let mut cur = s;
    let mut length = 0.0;
    while cur != d {
        let here = to_dst[cur.0];
        let next = g
            .neighbors(cur)
            .iter()
            .copied()
            .find(|&u| {
                !on_path[u.0] && (g.dist(cur, u) + to_dst[u.0] - here).abs() <= BOUNDARY_EPS * (1.0 + here)
            })
            .expect("a shortest-path successor exists for every reachable node");
        length += g.dist(cur, next);
        on_path[next.0] = true;
        nodes.push(next);
        cur = next;
    }
    Ok(Some(PathRecord { nodes, length }))
}
