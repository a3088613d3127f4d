//! Bounded elliptic search for geographic routing in wireless meshes.
//!
//! The crate is split along the pipeline it supports:
//!
//! * [`geometry`]: points, unit-disk random geometric graphs, ellipse
//!   membership and Euclidean shortest paths.
//! * [`stretch`]: Monte Carlo datasets of path stretch and observed ellipse
//!   factors over random networks.
//! * [`ellipse`]: the density-normalized quantile model that predicts the
//!   ellipse factor needed for connectivity and for capacity.
//! * [`protocol`]: QF-Geo depth-first forwarding inside the predicted
//!   ellipse, plus greedy forwarding and maximum capacity routing baselines.
//! * [`sim`]: a slotted two-radio CSMA mesh simulator with beacons, mobility
//!   and a disk jammer.
//! * [`metrics`]: goodput, reception ratio, latency and goodput efficiency.

// `!(x > 0.0)` is the idiom here because it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ellipse;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod protocol;
pub mod seed;
pub mod sim;
pub mod stretch;

pub use ellipse::{EllipseModel, FitReport};
pub use error::{Error, Result};
pub use geometry::{DensitySpec, Ellipse, NetworkGraph, NodeId, PathRecord, Point};
pub use metrics::MetricsReport;
pub use protocol::{ForwardDecision, NodeState, Packet, ProtocolParams};
pub use sim::{EventLog, FlowSpec, TrialConfig};
pub use stretch::{StretchDataset, StretchSample, StudyConfig};

/// Version string stamped into every emitted artifact.
pub const CODE_VERSION: &str = concat!("qfgeo-core ", env!("CARGO_PKG_VERSION"));
