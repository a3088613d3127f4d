//! Trial metrics computed from an event log.
//!
//! Goodput is total received bits over the mean flow time of the flows that
//! received anything. Goodput efficiency scales it by the reception ratio
//! and normalizes by the spectrum bit rate times the number of flows.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::{EventKind, EventLog, FlowSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMetrics {
    pub flow: u32,
    pub src: usize,
    pub dst: usize,
    pub packets_sent: u64,
    pub packets_received: u64,
    /// First generation to last delivery; `None` without deliveries.
    pub flow_time_s: Option<f64>,
    pub goodput_bps: f64,
    pub latency_s: Option<f64>,
}

impl FlowMetrics {
    pub fn delivered(&self) -> bool {
        self.packets_received > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub goodput_bps: f64,
    pub reception_ratio: f64,
    /// Mean over delivered packets.
    pub latency_s: f64,
    pub goodput_efficiency: f64,
    /// Flows with at least one delivered packet.
    pub flows_delivered: usize,
    pub flow_count: usize,
    pub packets_sent: u64,
    pub packets_received: u64,
    pub bandwidth_bps: f64,
    pub per_flow: Vec<FlowMetrics>,
    pub params_echo: BTreeMap<String, String>,
}

impl MetricsReport {
    pub fn empty(bandwidth_bps: f64) -> Self {
        MetricsReport {
            goodput_bps: 0.0,
            reception_ratio: 0.0,
            latency_s: 0.0,
            goodput_efficiency: 0.0,
            flows_delivered: 0,
            flow_count: 0,
            packets_sent: 0,
            packets_received: 0,
            bandwidth_bps,
            per_flow: Vec::new(),
            params_echo: BTreeMap::new(),
        }
    }

    /// Whether the efficiency field equals its defining product.
    pub fn efficiency_identity_holds(&self) -> bool {
        self.goodput_efficiency == efficiency(self.goodput_bps, self.reception_ratio, self.bandwidth_bps, self.flow_count)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn efficiency(goodput: f64, rr: f64, bandwidth: f64, flows: usize) -> f64 {
    if flows == 0 || bandwidth <= 0.0 {
        0.0
    } else {
        goodput * rr / (bandwidth * flows as f64)
    }
}

/// Metrics of one trial. `slot_s` converts slot stamps to seconds; a packet
/// generated and delivered in the same slot has a latency of one slot.
pub fn compute_metrics(log: &EventLog, flows: &[FlowSpec], bandwidth_bps: f64, slot_s: f64) -> MetricsReport {
    let mut report = MetricsReport::empty(bandwidth_bps);
    report.flow_count = flows.len();
    if flows.is_empty() {
        return report;
    }

    let mut generated: BTreeMap<u64, (u32, u64)> = BTreeMap::new();
    let mut delivered: BTreeMap<u64, u64> = BTreeMap::new();
    for e in log.iter() {
        match (e.kind, e.packet, e.flow) {
            (EventKind::Generate, Some(p), Some(f)) => {
                generated.entry(p).or_insert((f, e.time_slot));
            }
            (EventKind::Deliver, Some(p), Some(_)) => {
                delivered.entry(p).or_insert(e.time_slot);
            }
            _ => {}
        }
    }

    #[derive(Default)]
    struct Acc {
        sent: u64,
        received: u64,
        first_gen: Option<u64>,
        last_recv: Option<u64>,
        latency_slots: u64,
    }
    let mut acc: BTreeMap<u32, Acc> = BTreeMap::new();
    let known: BTreeSet<u32> = flows.iter().map(|f| f.id.0).collect();
    for (&pid, &(flow, gen)) in &generated {
        if !known.contains(&flow) {
            continue;
        }
        let a = acc.entry(flow).or_default();
        a.sent += 1;
        a.first_gen = Some(a.first_gen.map_or(gen, |g| g.min(gen)));
        if let Some(&recv) = delivered.get(&pid) {
            a.received += 1;
            a.last_recv = Some(a.last_recv.map_or(recv, |r| r.max(recv)));
            a.latency_slots += recv - gen + 1;
        }
    }

    let mut total_bits = 0.0;
    let mut time_sum = 0.0;
    let mut latency_slots = 0u64;
    for f in flows {
        let a = acc.remove(&f.id.0).unwrap_or_default();
        let bits = a.received as f64 * f64::from(f.packet_bits);
        let flow_time = match (a.first_gen, a.last_recv) {
            (Some(g), Some(r)) if a.received > 0 => Some((r - g + 1) as f64 * slot_s),
            _ => None,
        };
        if let Some(t) = flow_time {
            total_bits += bits;
            time_sum += t;
            report.flows_delivered += 1;
        }
        latency_slots += a.latency_slots;
        report.packets_sent += a.sent;
        report.packets_received += a.received;
        report.per_flow.push(FlowMetrics {
            flow: f.id.0,
            src: f.src.0,
            dst: f.dst.0,
            packets_sent: a.sent,
            packets_received: a.received,
            flow_time_s: flow_time,
            goodput_bps: flow_time.map_or(0.0, |t| bits / t),
            latency_s: (a.received > 0).then(|| a.latency_slots as f64 * slot_s / a.received as f64),
        });
    }

    if report.flows_delivered > 0 {
        report.goodput_bps = total_bits / (time_sum / report.flows_delivered as f64);
    }
    if report.packets_sent > 0 {
        report.reception_ratio = report.packets_received as f64 / report.packets_sent as f64;
    }
    if report.packets_received > 0 {
        report.latency_s = latency_slots as f64 * slot_s / report.packets_received as f64;
    }
    report.goodput_efficiency = efficiency(
        report.goodput_bps,
        report.reception_ratio,
        report.bandwidth_bps,
        report.flow_count,
    );
    report
}
