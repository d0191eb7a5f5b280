//! Transmitter-side bookkeeping of what the receiver holds.
//!
//! Per-hop nodes replay every acknowledged innovative row into a
//! [`DofTracker`], which is then an exact (delayed) copy of the receiver's
//! state: its first unknown symbol is the lowest symbol still worth coding
//! over, and anything below can be dropped without elimination. The
//! end-to-end variant reads the same information from destination reports.

use std::collections::{BTreeMap, BTreeSet};

use crate::dof::DofTracker;
use crate::error::{violation, SimError};
use crate::types::{FeedbackBundle, PacketKind, SinkReport, Slot, Span};

/// Feedback-driven inputs of the posterior repair ratio. The per-period
/// transmission counts are kept by the node itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RepairCounters {
    /// New symbols reported lost and still inside the window.
    pub md_nack: u64,
    /// Lost symbols already compensated by acknowledged repair.
    pub ad_ack: u64,
}

#[derive(Debug, Clone, Default)]
pub struct HopAccount {
    replica: DofTracker,
    in_flight: BTreeMap<Slot, (Span, PacketKind)>,
    lost_new: BTreeSet<u64>,
    newest_reported: Option<u64>,
}

impl HopAccount {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn on_sent(&mut self, t: Slot, span: Span, kind: PacketKind) {
        self.in_flight.insert(t, (span, kind));
    }

    pub fn on_feedback(&mut self, fb: &FeedbackBundle) -> Result<(), SimError> {
        let (span, kind) = self
            .in_flight
            .remove(&fb.acked_packet_created_at)
            .ok_or_else(|| {
                violation(format!(
                    "feedback for unknown transmission at slot {}",
                    fb.acked_packet_created_at
                ))
            })?;
        if fb.ack && fb.innovative && !self.replica.insert(span)? {
            return Err(violation(format!(
                "receiver reported {span} innovative but the replica disagrees"
            )));
        }
        if kind == PacketKind::New {
            self.newest_reported = Some(self.newest_reported.map_or(span.hi, |h| h.max(span.hi)));
            if !fb.ack {
                self.lost_new.insert(span.hi);
            }
        }
        let floor = self.replica.next_unknown();
        self.lost_new = self.lost_new.split_off(&floor);
        Ok(())
    }

    /// Lowest symbol the receiver may still be missing.
    pub fn floor(&self) -> u64 {
        self.replica.next_unknown()
    }

    pub fn counters(&self) -> RepairCounters {
        let floor = self.floor();
        let unknowns = self
            .newest_reported
            .map_or(0, |h| (h + 1).saturating_sub(floor));
        let deficit = unknowns.saturating_sub(self.replica.pending());
        let md_nack = self.lost_new.len() as u64;
        RepairCounters {
            md_nack,
            ad_ack: md_nack.saturating_sub(deficit),
        }
    }
}

/// Accounting from destination reports only, over the whole path.
#[derive(Debug, Clone)]
pub struct PathAccount {
    /// Minimum source-to-destination latency.
    path_delay: u64,
    /// `(slot, symbol)` of every New transmission.
    news: Vec<(Slot, u64)>,
    floor: u64,
    deficit: u64,
}

impl PathAccount {
    pub fn new(path_delay: u64) -> Self {
        PathAccount {
            path_delay,
            news: Vec::new(),
            floor: 0,
            deficit: 0,
        }
    }

    pub fn on_sent(&mut self, t: Slot, span: Span, kind: PacketKind) {
        if kind == PacketKind::New {
            self.news.push((t, span.hi));
        }
    }

    pub fn on_report(&mut self, rep: SinkReport) {
        if let Some(f) = rep.info_frontier {
            self.floor = self.floor.max(f + 1);
        }
        let known = match rep.observed_at.checked_sub(self.path_delay) {
            Some(cutoff) => {
                let n = self.news.partition_point(|&(s, _)| s <= cutoff);
                n.checked_sub(1).map(|i| self.news[i].1 + 1).unwrap_or(0)
            }
            None => 0,
        };
        self.deficit = known.saturating_sub(rep.dimension);
    }

    pub fn floor(&self) -> u64 {
        self.floor
    }

    pub fn counters(&self) -> RepairCounters {
        RepairCounters {
            md_nack: self.deficit,
            ad_ack: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Account {
    Hop(HopAccount),
    Path(PathAccount),
}

impl Account {
    pub fn on_sent(&mut self, t: Slot, span: Span, kind: PacketKind) {
        match self {
            Account::Hop(a) => a.on_sent(t, span, kind),
            Account::Path(a) => a.on_sent(t, span, kind),
        }
    }

    pub fn floor(&self) -> u64 {
        match self {
            Account::Hop(a) => a.floor(),
            Account::Path(a) => a.floor(),
        }
    }

    pub fn counters(&self) -> RepairCounters {
        match self {
            Account::Hop(a) => a.counters(),
            Account::Path(a) => a.counters(),
        }
    }
}
