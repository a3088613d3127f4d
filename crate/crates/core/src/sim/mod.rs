//! Slotted two-radio mesh simulator.
//!
//! Each slot runs, in order: mobility, hello beacons on the control channel,
//! flow arrivals and packet generation, then one round of slotted CSMA on
//! the data channels. A receiver acknowledges within the slot and runs the
//! configured protocol right away, so a packet can be relayed from the next
//! slot on.

mod channel;
mod config;
mod engine;
mod log;
mod mobility;

pub use channel::{covers, jammer_effect, resolve_slot, Jammer, Transmission, TxOutcome};
pub use config::{FlowPlan, FlowSpec, JammerConfig, NetworkSpec, RadioPlan, TrialConfig};
pub use engine::{Outgoing, SimNode, TrialState};
pub use log::{Event, EventKind, EventLog};
pub use mobility::{move_nodes, RandomWaypoint};

use crate::error::Result;
use crate::metrics::{compute_metrics, MetricsReport};

/// Runs a full trial. Identical configurations give identical logs.
pub fn run_trial(config: TrialConfig) -> Result<(EventLog, MetricsReport)> {
    let mut state = TrialState::new(config)?;
    while !state.is_finished() {
        state.step_slot();
    }
    let report = report_for(&state);
    Ok((state.log, report))
}

/// Metrics of the trial so far, echoing its configuration.
pub fn report_for(state: &TrialState) -> MetricsReport {
    let c = &state.config;
    let mut report = compute_metrics(&state.log, &state.flows, c.radio.bandwidth_bps, c.slot_s);
    report.params_echo = c
        .to_kv_string()
        .lines()
        .filter_map(|l| l.split_once('='))
        .filter(|(k, _)| *k != "node" && *k != "flow")
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    report
}
