//! Per-packet protocol trace records.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_slot: u64,
    pub packet: u64,
    pub flow: u32,
    pub node: usize,
    /// `forward`, `backtrack`, `deliver` or `drop`.
    pub action: String,
    pub target: Option<usize>,
    pub ell: Option<f64>,
    pub retx: u32,
}

/// Writes `time_slot,packet,flow,node,action,target,ell,retx`; empty cells
/// stand for absent values.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], mut w: W) -> Result<()> {
    writeln!(w, "time_slot,packet,flow,node,action,target,ell,retx")?;
    for r in records {
        let target = r.target.map(|t| t.to_string()).unwrap_or_default();
        let ell = r.ell.map(|e| e.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.time_slot, r.packet, r.flow, r.node, r.action, target, ell, r.retx
        )?;
    }
    Ok(())
}
