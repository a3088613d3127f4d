//! Jammer disk and per-slot transmission resolution.

use crate::geometry::{Point, BOUNDARY_EPS};

/// A jammer resolved to concrete coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jammer {
    pub position: Point,
    pub radius: f64,
    pub channel: u8,
}

/// Whether `pos` is blocked on `channel`. Only the jammed channel inside the
/// disk is affected.
pub fn jammer_effect(pos: &Point, channel: u8, jammer: Option<&Jammer>) -> bool {
    jammer.is_some_and(|j| j.channel == channel && covers(j, pos))
}

/// Whether `pos` lies inside the jamming disk on any channel.
pub fn covers(j: &Jammer, pos: &Point) -> bool {
    pos.dist(&j.position) <= j.radius + BOUNDARY_EPS
}

/// One data transmission attempted in a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    pub sender: usize,
    pub receiver: usize,
    pub channel: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxOutcome {
    Received,
    Collision,
    Jammed,
    OutOfRange,
    ReceiverBusy,
}

/// Resolves all transmissions of a slot against true node positions.
///
/// A transmission fails if the receiver is out of range, is itself sending
/// on the same channel, sits in the jammer disk on the jammed channel, or
/// hears another sender on that channel within `radius`.
pub fn resolve_slot(txs: &[Transmission], positions: &[Point], radius: f64, jammer: Option<&Jammer>) -> Vec<TxOutcome> {
    let within = |a: usize, b: usize| positions[a].dist(&positions[b]) <= radius + BOUNDARY_EPS;
    txs.iter()
        .enumerate()
        .map(|(i, t)| {
            if !within(t.sender, t.receiver) {
                return TxOutcome::OutOfRange;
            }
            if txs.iter().any(|o| o.sender == t.receiver && o.channel == t.channel) {
                return TxOutcome::ReceiverBusy;
            }
            if jammer_effect(&positions[t.receiver], t.channel, jammer) {
                return TxOutcome::Jammed;
            }
            let interfered = txs
                .iter()
                .enumerate()
                .any(|(k, o)| k != i && o.channel == t.channel && o.sender != t.sender && within(o.sender, t.receiver));
            if interfered {
                TxOutcome::Collision
            } else {
                TxOutcome::Received
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jammer() -> Jammer {
        Jammer {
            position: Point::new(0.0, 0.0),
            radius: 1.32,
            channel: 0,
        }
    }

    #[test]
    fn jammer_disk_and_channel() {
        let j = jammer();
        assert!(!jammer_effect(&Point::new(0.0, 0.0), 0, None));
        assert!(jammer_effect(&Point::new(1.0, 0.0), 0, Some(&j)));
        assert!(!jammer_effect(&Point::new(1.0, 0.0), 1, Some(&j)));
        assert!(!jammer_effect(&Point::new(1.5, 0.0), 0, Some(&j)));
    }

    #[test]
    fn common_receiver_loses_both() {
        let pos = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        let txs = [
            Transmission {
                sender: 0,
                receiver: 1,
                channel: 0,
            },
            Transmission {
                sender: 2,
                receiver: 1,
                channel: 0,
            },
        ];
        assert_eq!(
            resolve_slot(&txs, &pos, 1.0, None),
            vec![TxOutcome::Collision, TxOutcome::Collision]
        );
        let split = [txs[0], Transmission { channel: 1, ..txs[1] }];
        assert_eq!(
            resolve_slot(&split, &pos, 1.0, None),
            vec![TxOutcome::Received, TxOutcome::Received]
        );
    }

    #[test]
    fn jammed_receiver_and_outside_receiver() {
        // jammer at origin; receiver 1 km away is blocked, 1.5 km away is not
        let pos = [Point::new(0.5, 0.8), Point::new(1.0, 0.0), Point::new(1.5, 0.8), Point::new(1.5, 0.0)];
        let j = jammer();
        let txs = [Transmission {
            sender: 0,
            receiver: 1,
            channel: 0,
        }];
        assert_eq!(resolve_slot(&txs, &pos, 1.0, Some(&j)), vec![TxOutcome::Jammed]);
        let txs = [Transmission {
            sender: 2,
            receiver: 3,
            channel: 0,
        }];
        assert_eq!(resolve_slot(&txs, &pos, 1.0, Some(&j)), vec![TxOutcome::Received]);
    }

    #[test]
    fn out_of_range_and_busy_receiver() {
        let pos = [Point::new(0.0, 0.0), Point::new(1.2, 0.0), Point::new(0.5, 0.0)];
        let far = [Transmission {
            sender: 0,
            receiver: 1,
            channel: 0,
        }];
        assert_eq!(resolve_slot(&far, &pos, 1.0, None), vec![TxOutcome::OutOfRange]);
        let busy = [
            Transmission {
                sender: 0,
                receiver: 2,
                channel: 1,
            },
            Transmission {
                sender: 2,
                receiver: 1,
                channel: 1,
            },
        ];
        assert_eq!(resolve_slot(&busy, &pos, 1.0, None)[0], TxOutcome::ReceiverBusy);
    }
}
