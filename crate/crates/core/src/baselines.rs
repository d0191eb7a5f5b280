//! Comparison schemes: mixing relays for the end-to-end coded baseline and
//! per-hop selective-repeat ARQ.
//!
//! The FEC-filling relay variant needs no state of its own; it is the coded
//! node with blank-space pausing disabled and idle slots filled (see
//! [`crate::source::NodePolicy::for_node`]).

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{violation, SimError};
use crate::ledger::Action;
use crate::net::{Decision, Emission};
use crate::types::{FeedbackBundle, PacketKind, Slot, Span};

/// Relay that combines everything it has ever stored, every slot.
#[derive(Debug, Clone, Default)]
pub struct MixingRelay {
    last_sent_held: u64,
}

impl MixingRelay {
    pub fn new() -> Self {
        Self::default()
    }

    /// `held` is the number of stored symbols. Silent while empty.
    pub fn step(&mut self, held: u64) -> Decision {
        if held == 0 {
            return Decision {
                action: Action::NnfIdle,
                emission: None,
                bsp_start: None,
                bsp_check: None,
            };
        }
        let kind = if held > self.last_sent_held {
            PacketKind::New
        } else {
            PacketKind::FecPosterior
        };
        self.last_sent_held = held;
        Decision {
            action: kind.into(),
            emission: Some(Emission {
                span: Span::new(0, held - 1),
                kind,
                filler: false,
            }),
            bsp_start: None,
            bsp_check: None,
        }
    }
}

/// Selective-repeat sender for one hop. Packets are information sequence
/// numbers; each is sent uncoded until acknowledged.
#[derive(Debug, Clone)]
pub struct ArqSender {
    rtt: u64,
    window: u64,
    /// Received from upstream (or arrived) and never sent.
    fresh: BTreeSet<u64>,
    /// Sent at least once and not yet acknowledged, with last send slot.
    unacked: BTreeMap<u64, Slot>,
    /// Transmission slot → sequence number, awaiting feedback.
    in_flight: BTreeMap<Slot, u64>,
    retransmit: BTreeSet<u64>,
}

impl ArqSender {
    /// At most `rtt` transmissions awaiting feedback (one bandwidth-delay
    /// product); the retransmission timer is also `rtt`.
    pub fn new(rtt: u64) -> Self {
        ArqSender {
            rtt,
            window: rtt,
            fresh: BTreeSet::new(),
            unacked: BTreeMap::new(),
            in_flight: BTreeMap::new(),
            retransmit: BTreeSet::new(),
        }
    }

    pub fn offer(&mut self, seq: u64) {
        self.fresh.insert(seq);
    }

    pub fn on_feedback(&mut self, fb: &FeedbackBundle) -> Result<(), SimError> {
        let seq = self
            .in_flight
            .remove(&fb.acked_packet_created_at)
            .ok_or_else(|| {
                violation(format!(
                    "feedback for unknown transmission at slot {}",
                    fb.acked_packet_created_at
                ))
            })?;
        if fb.ack {
            self.unacked.remove(&seq);
            self.retransmit.remove(&seq);
        } else if self.unacked.contains_key(&seq) && !self.in_flight.values().any(|&s| s == seq) {
            self.retransmit.insert(seq);
        }
        Ok(())
    }

    fn timed_out(&self, t: Slot) -> Option<u64> {
        self.unacked
            .iter()
            .find(|&(seq, &sent)| {
                sent + self.rtt < t
                    && !self.retransmit.contains(seq)
                    && !self.in_flight.values().any(|s| s == seq)
            })
            .map(|(&seq, _)| seq)
    }

    pub fn step(&mut self, t: Slot) -> Decision {
        let open = (self.in_flight.len() as u64) < self.window;
        let next = if !open {
            None
        } else if let Some(seq) = self.retransmit.pop_first() {
            Some((seq, PacketKind::FecPosterior))
        } else if let Some(seq) = self.timed_out(t) {
            Some((seq, PacketKind::FecPosterior))
        } else {
            self.fresh.pop_first().map(|seq| (seq, PacketKind::New))
        };
        let Some((seq, kind)) = next else {
            return Decision {
                action: Action::NnfIdle,
                emission: None,
                bsp_start: None,
                bsp_check: None,
            };
        };
        self.unacked.insert(seq, t);
        self.in_flight.insert(t, seq);
        Decision {
            action: kind.into(),
            emission: Some(Emission {
                span: Span::single(seq),
                kind,
                filler: false,
            }),
            bsp_start: None,
            bsp_check: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fb(at: Slot, ack: bool) -> FeedbackBundle {
        FeedbackBundle {
            acked_packet_created_at: at,
            observed_at: at + 1,
            ack,
            innovative: ack,
            downstream: Vec::new(),
            sink_report: None,
        }
    }

    #[test]
    fn mixing_relay_spans_everything_held() {
        let mut r = MixingRelay::new();
        assert!(r.step(0).emission.is_none());
        let d = r.step(3);
        assert_eq!(d.action, Action::New);
        assert_eq!(d.emission.unwrap().span, Span::new(0, 2));
        assert_eq!(r.step(3).action, Action::FecPosterior);
    }

    #[test]
    fn nacked_packet_is_resent_alone() {
        let mut s = ArqSender::new(4);
        for seq in 0..3 {
            s.offer(seq);
        }
        for t in 0..3 {
            assert_eq!(s.step(t).action, Action::New);
        }
        s.on_feedback(&fb(0, true)).unwrap();
        s.on_feedback(&fb(1, false)).unwrap();
        s.on_feedback(&fb(2, true)).unwrap();
        let d = s.step(4);
        assert_eq!(d.action, Action::FecPosterior);
        assert_eq!(d.emission.unwrap().span, Span::single(1));
        assert_eq!(s.step(5).action, Action::NnfIdle);
    }

    #[test]
    fn window_limits_new_sends() {
        let mut s = ArqSender::new(2);
        for seq in 0..5 {
            s.offer(seq);
        }
        assert_eq!(s.step(0).action, Action::New);
        assert_eq!(s.step(1).action, Action::New);
        assert_eq!(s.step(2).action, Action::NnfIdle);
        s.on_feedback(&fb(0, true)).unwrap();
        assert_eq!(s.step(3).emission.unwrap().span, Span::single(2));
    }
}
