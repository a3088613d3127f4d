//! Trial configuration and its flat `key=value` text form.

use std::fmt::Write as _;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ellipse::EllipseModel;
use crate::error::{Error, Result};
use crate::geometry::{DensitySpec, NodeId, Point};
use crate::protocol::{FlowId, ProtocolKind, ProtocolParams, ThetaMode, PACKET_BITS};

/// Where node positions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NetworkSpec {
    /// Uniform deployment drawn from the trial seed.
    Generated(DensitySpec),
    /// Fixed positions in km.
    Explicit(Vec<Point>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FlowPlan {
    /// `count` random distinct endpoint pairs drawn from the trial seed.
    Random(usize),
    Explicit(Vec<(NodeId, NodeId)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JammerConfig {
    /// Jammer position in km; `None` puts it at the deployment center.
    pub position: Option<Point>,
    /// Radius in km inside which the jammed channel is unusable.
    pub radius_km: f64,
    pub channel: u8,
}

impl Default for JammerConfig {
    fn default() -> Self {
        JammerConfig {
            position: None,
            radius_km: 1.32,
            channel: 0,
        }
    }
}

/// Two radios per node sharing two data channels and one control channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioPlan {
    pub radios: usize,
    pub data_channels: usize,
    pub data_rate_bps: f64,
    pub control_rate_bps: f64,
    /// Bit rate over the whole spectrum, the denominator of goodput
    /// efficiency.
    pub bandwidth_bps: f64,
}

impl Default for RadioPlan {
    fn default() -> Self {
        RadioPlan {
            radios: 2,
            data_channels: 2,
            data_rate_bps: 3.5e6,
            control_rate_bps: 1e6,
            bandwidth_bps: 8e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub size_bits: u64,
    pub packet_bits: u32,
    /// `C(fl)`: the flow's bit rate as a share of one data channel.
    pub capacity_req: f64,
}

impl FlowSpec {
    pub fn packet_count(&self) -> u64 {
        self.size_bits.div_ceil(u64::from(self.packet_bits))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub network: NetworkSpec,
    pub seed: u64,
    pub flows: FlowPlan,
    pub flow_size_bits: u64,
    pub packet_bits: u32,
    /// Node speed in m/s; 0 disables mobility.
    pub mobility_mps: f64,
    pub jammer: Option<JammerConfig>,
    pub duration_s: f64,
    pub slot_s: f64,
    pub hello_period_s: f64,
    pub arrival_s: f64,
    /// Transmission and interference radius in km.
    pub radius_km: f64,
    pub radio: RadioPlan,
    pub protocol: ProtocolKind,
    pub params: ProtocolParams,
    /// Upper bound of the uniform backoff after a busy sense or a failure.
    pub backoff_max_slots: u32,
    /// Slots over which transmit and interference probabilities are measured.
    pub theta_window: usize,
    /// Beacon periods after which an unheard neighbor is forgotten.
    pub neighbor_timeout_periods: u32,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            network: NetworkSpec::Generated(DensitySpec { n: 64, rho: 2.0 }),
            seed: 1,
            flows: FlowPlan::Random(1),
            flow_size_bits: 3_000_000,
            packet_bits: PACKET_BITS,
            mobility_mps: 0.0,
            jammer: None,
            duration_s: 30.0,
            slot_s: 0.003,
            hello_period_s: 0.2,
            arrival_s: 5.0,
            radius_km: 1.0,
            radio: RadioPlan::default(),
            protocol: ProtocolKind::QfGeo,
            params: ProtocolParams::default(),
            backoff_max_slots: 3,
            theta_window: 50,
            neighbor_timeout_periods: 3,
        }
    }
}

impl TrialConfig {
    /// A generated network of `n` nodes at density `rho`; the protocol's
    /// density input follows the deployment.
    pub fn generated(n: usize, rho: f64, seed: u64) -> Self {
        let mut c = TrialConfig {
            network: NetworkSpec::Generated(DensitySpec { n, rho }),
            seed,
            ..TrialConfig::default()
        };
        c.params.rho = rho;
        c
    }

    pub fn slots(&self) -> u64 {
        (self.duration_s / self.slot_s).round() as u64
    }

    pub fn arrival_slot(&self) -> u64 {
        (self.arrival_s / self.slot_s).round() as u64
    }

    pub fn hello_slots(&self) -> u64 {
        ((self.hello_period_s / self.slot_s).round() as u64).max(1)
    }

    /// Per-flow requirement: one packet per slot over one data channel.
    pub fn capacity_req(&self) -> f64 {
        (f64::from(self.packet_bits) / self.slot_s) / self.radio.data_rate_bps
    }

    pub fn node_count(&self) -> usize {
        match &self.network {
            NetworkSpec::Generated(spec) => spec.n,
            NetworkSpec::Explicit(p) => p.len(),
        }
    }

    /// Time to push one data packet over one data channel.
    pub fn packet_airtime_s(&self) -> f64 {
        f64::from(self.packet_bits) / self.radio.data_rate_bps
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.slot_s > 0.0) {
            return bad(format!("slot must be positive, got {}", self.slot_s));
        }
        if !(self.duration_s > self.arrival_s) {
            return bad(format!(
                "duration {} must exceed flow arrival {}",
                self.duration_s, self.arrival_s
            ));
        }
        if self.packet_airtime_s() >= self.slot_s {
            return bad(format!(
                "a {}-bit packet needs {:.3} ms at {} bps, longer than the {:.3} ms slot",
                self.packet_bits,
                self.packet_airtime_s() * 1e3,
                self.radio.data_rate_bps,
                self.slot_s * 1e3
            ));
        }
        if self.radio.radios == 0 || self.radio.data_channels == 0 || self.radio.data_channels > 255 {
            return bad("need at least one radio and one data channel".into());
        }
        if !(self.radius_km > 0.0) || !(self.mobility_mps >= 0.0) || !(self.hello_period_s > 0.0) {
            return bad("radius, speed and hello period must be positive".into());
        }
        if self.flow_size_bits == 0 || self.packet_bits == 0 {
            return bad("flow and packet sizes must be positive".into());
        }
        if let Some(j) = &self.jammer {
            if usize::from(j.channel) >= self.radio.data_channels || !(j.radius_km >= 0.0) {
                return bad("jammer must target an existing data channel with a non-negative radius".into());
            }
        }
        if self.theta_window == 0 {
            return bad("theta_window must be positive".into());
        }
        match &self.network {
            NetworkSpec::Generated(spec) => {
                DensitySpec::new(spec.n, spec.rho).map_err(|e| Error::Config(e.to_string()))?;
            }
            NetworkSpec::Explicit(p) if p.len() < 2 => return bad("need at least two nodes".into()),
            NetworkSpec::Explicit(_) => {}
        }
        let n = self.node_count();
        if let FlowPlan::Explicit(pairs) = &self.flows {
            for (s, d) in pairs {
                if s == d || s.0 >= n || d.0 >= n {
                    return bad(format!("invalid flow {s} -> {d}"));
                }
            }
        }
        self.params.validate()
    }

    /// Protocol name including the unbounded variant.
    pub fn protocol_label(&self) -> &'static str {
        match (self.protocol, self.params.unbounded) {
            (ProtocolKind::QfGeo, true) => "qfgeo_unbounded",
            (p, _) => p.as_str(),
        }
    }

    /// Selects a protocol by name. `qfgeo_unbounded` (or `qfgeo-a`) is QF-Geo
    /// without the bounding ellipse.
    pub fn set_protocol(&mut self, name: &str) -> Result<()> {
        if name == "qfgeo_unbounded" || name == "qfgeo-a" {
            self.protocol = ProtocolKind::QfGeo;
            self.params.unbounded = true;
        } else {
            self.protocol = name.parse()?;
        }
        Ok(())
    }

    /// Canonical `key=value` rendering; parsing it yields the same config.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        match &self.network {
            NetworkSpec::Generated(spec) => {
                kv("size", spec.n.to_string());
                kv("density", spec.rho.to_string());
            }
            NetworkSpec::Explicit(points) => {
                for p in points {
                    kv("node", format!("{} {}", p.x, p.y));
                }
            }
        }
        kv("seed", self.seed.to_string());
        match &self.flows {
            FlowPlan::Random(k) => kv("flows", k.to_string()),
            FlowPlan::Explicit(pairs) => {
                for (a, b) in pairs {
                    kv("flow", format!("{a} {b}"));
                }
            }
        }
        kv("flow_size_bits", self.flow_size_bits.to_string());
        kv("packet_bits", self.packet_bits.to_string());
        kv("mobility", self.mobility_mps.to_string());
        kv("jammer", self.jammer.is_some().to_string());
        if let Some(j) = &self.jammer {
            kv("jammer_radius_km", j.radius_km.to_string());
            kv("jammed_channel", j.channel.to_string());
            if let Some(p) = j.position {
                kv("jammer_position", format!("{} {}", p.x, p.y));
            }
        }
        kv("duration_s", self.duration_s.to_string());
        kv("slot_s", self.slot_s.to_string());
        kv("hello_period_s", self.hello_period_s.to_string());
        kv("arrival_s", self.arrival_s.to_string());
        kv("radius_km", self.radius_km.to_string());
        kv("radios", self.radio.radios.to_string());
        kv("data_channels", self.radio.data_channels.to_string());
        kv("data_rate_bps", self.radio.data_rate_bps.to_string());
        kv("control_rate_bps", self.radio.control_rate_bps.to_string());
        kv("bandwidth_bps", self.radio.bandwidth_bps.to_string());
        kv("protocol", self.protocol_label().to_string());
        let p = &self.params;
        kv("epsilon", p.epsilon.to_string());
        kv("retx_max", p.retx_max.to_string());
        kv("c_min", p.c_min.to_string());
        kv("rho", p.rho.to_string());
        kv("alpha", p.model.alpha.to_string());
        kv("beta", p.model.beta.to_string());
        kv("gamma", p.model.gamma.to_string());
        kv("ell_min", p.model.ell_min.to_string());
        kv("theta_mode", p.theta_mode.as_str().to_string());
        kv("max_reroutes", p.max_reroutes.to_string());
        kv("header_cap", p.header_cap.to_string());
        kv("backoff_max_slots", self.backoff_max_slots.to_string());
        kv("theta_window", self.theta_window.to_string());
        kv("neighbor_timeout_periods", self.neighbor_timeout_periods.to_string());
        s
    }

    /// Parses flat `key=value` lines over the defaults. `#` starts a comment.
    /// `node=x y` and `flow=src dst` may repeat. Unless `rho` is given, the
    /// protocol's density input follows `density`.
    pub fn from_kv<R: BufRead>(r: R) -> Result<Self> {
        let mut c = TrialConfig::default();
        let mut size = None;
        let mut density = None;
        let mut nodes = Vec::new();
        let mut pairs = Vec::new();
        let mut explicit_rho = false;
        let mut jammer_on = false;
        let mut jammer = JammerConfig::default();

        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno, "expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
                v.parse()
                    .map_err(|_| Error::parse(line, format!("bad value `{v}` for `{key}`")))
            }
            fn pair<T: FromStr>(line: usize, key: &str, v: &str) -> Result<(T, T)> {
                let mut it = v.split_whitespace();
                match (it.next(), it.next(), it.next()) {
                    (Some(a), Some(b), None) => Ok((num(line, key, a)?, num(line, key, b)?)),
                    _ => Err(Error::parse(line, format!("`{key}` needs two values"))),
                }
            }
            match key {
                "size" => size = Some(num(lineno, key, value)?),
                "density" => density = Some(num(lineno, key, value)?),
                "node" => {
                    let (x, y) = pair(lineno, key, value)?;
                    nodes.push(Point::new(x, y));
                }
                "seed" => c.seed = num(lineno, key, value)?,
                "flows" => c.flows = FlowPlan::Random(num(lineno, key, value)?),
                "flow" => {
                    let (a, b): (usize, usize) = pair(lineno, key, value)?;
                    pairs.push((NodeId(a), NodeId(b)));
                }
                "flow_size_bits" => c.flow_size_bits = num(lineno, key, value)?,
                "packet_bits" => c.packet_bits = num(lineno, key, value)?,
                "mobility" => {
                    c.mobility_mps = match value {
                        "off" | "false" => 0.0,
                        v => num(lineno, key, v)?,
                    }
                }
                "jammer" => jammer_on = parse_bool(lineno, value)?,
                "jammer_radius_km" => jammer.radius_km = num(lineno, key, value)?,
                "jammed_channel" => jammer.channel = num(lineno, key, value)?,
                "jammer_position" => {
                    let (x, y) = pair(lineno, key, value)?;
                    jammer.position = Some(Point::new(x, y));
                }
                "duration_s" => c.duration_s = num(lineno, key, value)?,
                "slot_s" => c.slot_s = num(lineno, key, value)?,
                "hello_period_s" => c.hello_period_s = num(lineno, key, value)?,
                "arrival_s" => c.arrival_s = num(lineno, key, value)?,
                "radius_km" => c.radius_km = num(lineno, key, value)?,
                "radios" => c.radio.radios = num(lineno, key, value)?,
                "data_channels" => c.radio.data_channels = num(lineno, key, value)?,
                "data_rate_bps" => c.radio.data_rate_bps = num(lineno, key, value)?,
                "control_rate_bps" => c.radio.control_rate_bps = num(lineno, key, value)?,
                "bandwidth_bps" => c.radio.bandwidth_bps = num(lineno, key, value)?,
                "protocol" => c.set_protocol(value).map_err(|e| Error::parse(lineno, e.to_string()))?,
                "unbounded" => c.params.unbounded = parse_bool(lineno, value)?,
                "epsilon" => c.params.epsilon = num(lineno, key, value)?,
                "retx_max" => c.params.retx_max = num(lineno, key, value)?,
                "c_min" => c.params.c_min = num(lineno, key, value)?,
                "rho" => {
                    c.params.rho = num(lineno, key, value)?;
                    explicit_rho = true;
                }
                "alpha" => c.params.model.alpha = num(lineno, key, value)?,
                "beta" => c.params.model.beta = num(lineno, key, value)?,
                "gamma" => c.params.model.gamma = num(lineno, key, value)?,
                "ell_min" => c.params.model.ell_min = num(lineno, key, value)?,
                "theta_mode" => {
                    c.params.theta_mode =
                        ThetaMode::from_str(value).map_err(|e| Error::parse(lineno, e.to_string()))?
                }
                "max_reroutes" => c.params.max_reroutes = num(lineno, key, value)?,
                "header_cap" => c.params.header_cap = num(lineno, key, value)?,
                "backoff_max_slots" => c.backoff_max_slots = num(lineno, key, value)?,
                "theta_window" => c.theta_window = num(lineno, key, value)?,
                "neighbor_timeout_periods" => c.neighbor_timeout_periods = num(lineno, key, value)?,
                other => return Err(Error::parse(lineno, format!("unknown key `{other}`"))),
            }
        }

        if !nodes.is_empty() {
            if size.is_some() || density.is_some() {
                return Err(Error::Config("give either node positions or size/density, not both".into()));
            }
            c.network = NetworkSpec::Explicit(nodes);
        } else {
            let default = DensitySpec { n: 64, rho: 2.0 };
            let spec = DensitySpec {
                n: size.unwrap_or(default.n),
                rho: density.unwrap_or(default.rho),
            };
            if !explicit_rho {
                c.params.rho = spec.rho;
            }
            c.network = NetworkSpec::Generated(spec);
        }
        if !pairs.is_empty() {
            c.flows = FlowPlan::Explicit(pairs);
        }
        c.jammer = jammer_on.then_some(jammer);
        c.params.model = EllipseModel {
            alpha: c.params.model.alpha,
            beta: c.params.model.beta,
            gamma: c.params.model.gamma,
            ell_min: c.params.model.ell_min,
        };
        c.validate()?;
        Ok(c)
    }
}

fn parse_bool(line: usize, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::parse(line, format!("expected a boolean, got `{v}`"))),
    }
}
