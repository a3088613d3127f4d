//! Slot-stamped event records and their CSV form.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// A flow's source became active.
    FlowStart,
    /// The application handed a packet to its source.
    Generate,
    /// A radio put a packet on a data channel.
    Send,
    /// The receiver got the packet and acknowledged it.
    Receive,
    /// Lost to overlapping transmissions at the receiver.
    Collision,
    /// Lost to the jammer at the receiver.
    Jammed,
    /// Lost because the receiver moved out of range or was itself sending
    /// on that channel.
    Lost,
    Forward,
    Backtrack,
    Deliver,
    Drop,
    Beacon,
    /// MCR state collection started for a flow; `retx` holds its cost in
    /// slots.
    Explore,
    /// MCR found a route (`ell` is the bottleneck-free region factor).
    RouteReady,
    /// MCR found no route; the flow's packets are dropped at the source.
    RouteFailed,
}

impl EventKind {
    pub const ALL: [EventKind; 15] = [
        EventKind::FlowStart,
        EventKind::Generate,
        EventKind::Send,
        EventKind::Receive,
        EventKind::Collision,
        EventKind::Jammed,
        EventKind::Lost,
        EventKind::Forward,
        EventKind::Backtrack,
        EventKind::Deliver,
        EventKind::Drop,
        EventKind::Beacon,
        EventKind::Explore,
        EventKind::RouteReady,
        EventKind::RouteFailed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::FlowStart => "flow_start",
            EventKind::Generate => "generate",
            EventKind::Send => "send",
            EventKind::Receive => "receive",
            EventKind::Collision => "collision",
            EventKind::Jammed => "jammed",
            EventKind::Lost => "lost",
            EventKind::Forward => "forward",
            EventKind::Backtrack => "backtrack",
            EventKind::Deliver => "deliver",
            EventKind::Drop => "drop",
            EventKind::Beacon => "beacon",
            EventKind::Explore => "explore",
            EventKind::RouteReady => "route_ready",
            EventKind::RouteFailed => "route_failed",
        }
    }

    /// Outcome of a transmission attempt, paired with the `Send` before it.
    pub fn is_tx_outcome(self) -> bool {
        matches!(
            self,
            EventKind::Receive | EventKind::Collision | EventKind::Jammed | EventKind::Lost
        )
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown event kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time_slot: u64,
    pub kind: EventKind,
    pub node: usize,
    pub target: Option<usize>,
    pub packet: Option<u64>,
    pub flow: Option<u32>,
    pub channel: Option<u8>,
    pub ell: Option<f64>,
    pub retx: u32,
    /// Drop reason or other short qualifier.
    pub detail: String,
}

impl Event {
    pub fn new(time_slot: u64, kind: EventKind, node: usize) -> Self {
        Event {
            time_slot,
            kind,
            node,
            target: None,
            packet: None,
            flow: None,
            channel: None,
            ell: None,
            retx: 0,
            detail: String::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
}

const HEADER: [&str; 10] = [
    "time_slot", "kind", "node", "target", "packet", "flow", "channel", "ell", "retx", "detail",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt<T: FromStr>(field: &str, line: usize) -> Result<Option<T>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::parse(line, format!("bad field `{field}`")))
}

impl EventLog {
    pub fn push(&mut self, e: Event) {
        debug_assert!(self.events.last().is_none_or(|l| l.time_slot <= e.time_slot));
        self.events.push(e);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.of_kind(kind).count()
    }

    pub fn is_time_ordered(&self) -> bool {
        self.events.windows(2).all(|w| w[0].time_slot <= w[1].time_slot)
    }

    /// Every transmission outcome is immediately preceded by its `Send`
    /// with the same slot, packet and endpoints.
    pub fn outcomes_match_sends(&self) -> bool {
        self.events.iter().enumerate().all(|(i, e)| {
            if !e.kind.is_tx_outcome() {
                return true;
            }
            i > 0 && {
                let s = &self.events[i - 1];
                s.kind == EventKind::Send
                    && s.time_slot == e.time_slot
                    && s.packet == e.packet
                    && s.node == e.node
                    && s.target == e.target
                    && s.channel == e.channel
            }
        })
    }

    /// Successful hops of one packet as `(slot, from, to)`.
    pub fn hops_of(&self, packet: u64) -> Vec<(u64, usize, usize)> {
        self.of_kind(EventKind::Receive)
            .filter(|e| e.packet == Some(packet))
            .map(|e| (e.time_slot, e.node, e.target.expect("receive has a target")))
            .collect()
    }

    /// Streams the log as CSV. Floats keep full precision so a parsed log
    /// reproduces metrics exactly.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(HEADER)?;
        for e in &self.events {
            wr.write_record([
                e.time_slot.to_string(),
                e.kind.as_str().to_string(),
                e.node.to_string(),
                opt(e.target),
                opt(e.packet),
                opt(e.flow),
                opt(e.channel),
                opt(e.ell),
                e.retx.to_string(),
                e.detail.clone(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().ne(HEADER) {
            return Err(Error::parse(1, "unexpected event log header"));
        }
        let mut log = EventLog::default();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != HEADER.len() {
                return Err(Error::parse(line, "wrong field count"));
            }
            let req = |idx: usize| -> Result<&str> { Ok(&rec[idx]) };
            let num = |idx: usize| -> Result<u64> {
                rec[idx]
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad `{}`", HEADER[idx])))
            };
            log.events.push(Event {
                time_slot: num(0)?,
                kind: req(1)?.parse().map_err(|e: Error| Error::parse(line, e.to_string()))?,
                node: num(2)? as usize,
                target: parse_opt(&rec[3], line)?,
                packet: parse_opt(&rec[4], line)?,
                flow: parse_opt(&rec[5], line)?,
                channel: parse_opt(&rec[6], line)?,
                ell: parse_opt(&rec[7], line)?,
                retx: num(8)? as u32,
                detail: rec[9].to_string(),
            });
        }
        Ok(log)
    }
}
