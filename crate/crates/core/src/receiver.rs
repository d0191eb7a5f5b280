//! Receiving side of a hop: DoF counting for coded traffic (plus field
//! elimination in verification mode) and in-order reassembly for uncoded
//! traffic.

use std::collections::{BTreeMap, BTreeSet};

use crate::dof::DofTracker;
use crate::error::{violation, SimError};
use crate::gf::{Decoder, Row};
use crate::types::{CodedPacket, Span};

/// Result of storing one delivered coded packet.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Reception {
    /// Added a degree of freedom (and was stored).
    pub innovative: bool,
    /// Counting expected a new DoF but the coefficients were dependent.
    pub rank_deficient: bool,
    /// The coefficients were independent although counting expected not.
    pub unexpected: bool,
    /// Elimination over the transmitter's symbols solved further than
    /// counting: an overhanging coefficient block was singular.
    pub collapsed: bool,
}

#[derive(Debug, Clone, Default)]
struct FieldState {
    decoder: Decoder,
    /// Elimination over upstream symbols, the basis counting works in.
    local: Decoder,
    /// Highest local prefix already reported as a collapse.
    collapse_seen: u64,
    /// Stored rows by local symbol index, kept for recoding.
    held: BTreeMap<u64, Row>,
    /// Span over the transmitter's symbols of every stored row, never pruned.
    spans: Vec<Span>,
}

/// Coded receiver. Innovative packets become this node's own symbols
/// `0, 1, 2, …` in arrival order.
#[derive(Debug, Clone, Default)]
pub struct Receiver {
    tracker: DofTracker,
    /// Upstream symbols solved in order right after storing each symbol.
    solved_at_store: Vec<Option<u64>>,
    field: Option<FieldState>,
}

impl Receiver {
    pub fn new(verify: bool) -> Self {
        Receiver {
            field: verify.then(FieldState::default),
            ..Default::default()
        }
    }

    pub fn receive(&mut self, pkt: &CodedPacket) -> Result<Reception, SimError> {
        let counted = self.tracker.is_innovative(pkt.span)?;
        let mut out = Reception::default();
        let stored_index = self.held();
        match &mut self.field {
            None => out.innovative = counted,
            Some(field) => {
                let coding = pkt.coding.as_ref().ok_or_else(|| {
                    violation("verification run received a packet without coefficients")
                })?;
                let row = &coding.row;
                let independent = !field.decoder.contains(row);
                out.rank_deficient = counted && !independent;
                out.unexpected = independent && !counted;
                out.innovative = counted && independent;
                if out.innovative {
                    field.decoder.insert(row.clone());
                    field.held.insert(stored_index, row.clone());
                    field.spans.push(pkt.span);
                    field
                        .local
                        .insert(Row::new(pkt.span.lo, coding.local.clone(), Vec::new()));
                }
            }
        }
        if out.innovative {
            self.tracker.insert(pkt.span)?;
            self.solved_at_store.push(self.tracker.decoded());
            if let Some(field) = &mut self.field {
                let local = field.local.solved_prefix();
                if local > self.tracker.next_unknown() && local > field.collapse_seen {
                    out.collapsed = true;
                    field.collapse_seen = local;
                }
            }
        }
        Ok(out)
    }

    /// Number of symbols stored so far.
    pub fn held(&self) -> u64 {
        self.solved_at_store.len() as u64
    }

    /// Highest upstream symbol solved in order.
    pub fn decoded(&self) -> Option<u64> {
        self.tracker.decoded()
    }

    pub fn rank(&self) -> u64 {
        self.tracker.rank()
    }

    /// Upstream symbols recoverable from this node's own symbols `0..=m`.
    pub fn solved_at(&self, m: u64) -> Option<u64> {
        self.solved_at_store.get(m as usize).copied().flatten()
    }

    pub fn held_row(&self, m: u64) -> Option<&Row> {
        self.field.as_ref().and_then(|f| f.held.get(&m))
    }

    /// Drop stored rows below `floor`; they can no longer be coded over.
    pub fn prune_below(&mut self, floor: u64) {
        if let Some(f) = &mut self.field {
            f.held = f.held.split_off(&floor);
        }
    }

    pub fn decoder(&self) -> Option<&Decoder> {
        self.field.as_ref().map(|f| &f.decoder)
    }

    /// Transmitter-side spans of the stored symbols, in storage order.
    /// Empty unless verifying.
    pub fn stored_spans(&self) -> &[Span] {
        self.field.as_ref().map_or(&[], |f| &f.spans)
    }
}

/// Map the destination's solved prefix through each relay's store history
/// back to information packets. `relays` lists relay receivers in path
/// order (node 1 first).
pub fn info_frontier(solved: Option<u64>, relays: &[&Receiver]) -> Option<u64> {
    relays.iter().rev().try_fold(solved?, |m, r| r.solved_at(m))
}

/// Uncoded receiver: sequence numbers, duplicates ignored.
#[derive(Debug, Clone, Default)]
pub struct SeqIntake {
    contiguous: u64,
    above: BTreeSet<u64>,
}

impl SeqIntake {
    pub fn new() -> Self {
        Self::default()
    }

    /// Store `seq`; returns whether it was new.
    pub fn receive(&mut self, seq: u64) -> bool {
        if seq < self.contiguous || self.above.contains(&seq) {
            return false;
        }
        self.above.insert(seq);
        while self.above.remove(&self.contiguous) {
            self.contiguous += 1;
        }
        true
    }

    /// Highest sequence number received with no gaps below it.
    pub fn frontier(&self) -> Option<u64> {
        self.contiguous.checked_sub(1)
    }

    pub fn count(&self) -> u64 {
        self.contiguous + self.above.len() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{PacketKind, Span};

    fn pkt(lo: u64, hi: u64) -> CodedPacket {
        CodedPacket {
            origin: 0,
            created_at: 0,
            span: Span::new(lo, hi),
            kind: PacketKind::New,
            coding: None,
        }
    }

    #[test]
    fn stores_innovative_rows_as_local_symbols() {
        let mut r = Receiver::new(false);
        assert!(r.receive(&pkt(0, 1)).unwrap().innovative);
        assert!(r.receive(&pkt(0, 2)).unwrap().innovative);
        assert_eq!(r.held(), 2);
        assert_eq!(r.solved_at(1), None);
        assert!(r.receive(&pkt(0, 2)).unwrap().innovative);
        assert_eq!(r.solved_at(2), Some(2));
        assert!(!r.receive(&pkt(1, 2)).unwrap().innovative);
    }

    #[test]
    fn frontier_maps_through_relays() {
        let mut relay = Receiver::new(false);
        relay.receive(&pkt(0, 1)).unwrap();
        relay.receive(&pkt(0, 1)).unwrap();
        relay.receive(&pkt(2, 2)).unwrap();
        assert_eq!(info_frontier(Some(0), &[&relay]), None);
        assert_eq!(info_frontier(Some(1), &[&relay]), Some(1));
        assert_eq!(info_frontier(Some(2), &[&relay]), Some(2));
        assert_eq!(info_frontier(None, &[&relay]), None);
        assert_eq!(info_frontier(Some(4), &[]), Some(4));
    }

    #[test]
    fn seq_intake_tracks_gaps() {
        let mut s = SeqIntake::new();
        assert!(s.receive(1));
        assert_eq!(s.frontier(), None);
        assert!(s.receive(0));
        assert_eq!(s.frontier(), Some(1));
        assert!(!s.receive(1));
        assert_eq!(s.count(), 2);
    }
}
