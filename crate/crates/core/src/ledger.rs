//! Per-run event record consumed by the metrics and trace writers.

use std::fmt::{self, Write as _};

use crate::config::NetworkConfig;
use crate::types::{PacketKind, Protocol, Slot};

/// What a transmitting node did in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    /// Before the node's first transmission opportunity.
    PreOp,
    New,
    FecAPriori,
    FecPosterior,
    FecEow,
    /// Scheduled blank-space pause.
    BspIdle,
    /// Nothing new and no repair warranted (or nothing to send at all).
    NnfIdle,
}

impl Action {
    pub const ALL: [Action; 7] = [
        Action::PreOp,
        Action::New,
        Action::FecAPriori,
        Action::FecPosterior,
        Action::FecEow,
        Action::BspIdle,
        Action::NnfIdle,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Action::PreOp => "PRE_OP",
            Action::New => "NEW",
            Action::FecAPriori => "FEC_AP",
            Action::FecPosterior => "FEC_PO",
            Action::FecEow => "FEC_EOW",
            Action::BspIdle => "BSP_IDLE",
            Action::NnfIdle => "NNF_IDLE",
        }
    }

    pub fn from_code(code: &str) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.code() == code)
    }

    pub fn is_idle(self) -> bool {
        matches!(self, Action::BspIdle | Action::NnfIdle)
    }

    pub fn is_transmission(self) -> bool {
        !self.is_idle() && self != Action::PreOp
    }

    pub fn is_fec(self) -> bool {
        matches!(
            self,
            Action::FecAPriori | Action::FecPosterior | Action::FecEow
        )
    }
}

impl From<PacketKind> for Action {
    fn from(kind: PacketKind) -> Self {
        match kind {
            PacketKind::New => Action::New,
            PacketKind::FecAPriori => Action::FecAPriori,
            PacketKind::FecPosterior => Action::FecPosterior,
            PacketKind::FecEow => Action::FecEow,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A blank-space budget computed after an a-priori burst.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BspStart {
    pub node: usize,
    pub slot: Slot,
    pub bottleneck: usize,
    /// Raw duration before the one-slot activation floor.
    pub duration: f64,
}

/// One evaluation of the blank-space termination test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BspCheck {
    pub node: usize,
    pub slot: Slot,
    pub bottleneck: usize,
    pub remaining: f64,
    /// The node's own channel estimate.
    pub eps_node: f64,
    pub dof_rate: f64,
    /// `1 − ε̂` of the bottleneck channel.
    pub bound: f64,
    pub idled: bool,
}

/// Field-arithmetic cross-check collected in verification mode.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerificationReport {
    /// Sink receptions (each is a decode opportunity).
    pub opportunities: u64,
    /// Opportunities where the counted and the eliminated in-order decoded
    /// prefixes differ.
    pub disagreements: u64,
    /// Slots of those disagreements.
    pub disagreement_slots: Vec<Slot>,
    /// First slot of every run of consecutive disagreeing opportunities.
    pub episode_starts: Vec<Slot>,
    /// Rows that should have been innovative but were linearly dependent,
    /// as `(node, slot)`.
    pub rank_deficiencies: Vec<(usize, Slot)>,
    /// Receptions after which elimination over the transmitter's symbols
    /// solved further than counting, as `(node, slot)`.
    pub prefix_collapses: Vec<(usize, Slot)>,
    /// Recoded rows whose top information coefficient cancelled, so the row
    /// ends earlier than the symbols it mixes, as `(transmitter, slot)`.
    pub support_shrinks: Vec<(usize, Slot)>,
    /// Episode starts where rebuilding every row with fresh generic
    /// coefficients on the same supports reproduces the counted prefix, so
    /// the real coefficient matrix was rank-deficient in a block counting
    /// assumes full, as `(destination, slot)`.
    pub coincidences: Vec<(usize, Slot)>,
    /// Rows the field found innovative although counting did not.
    pub unexpected_innovations: u64,
    /// Decoded payloads that did not match the source data.
    pub payload_mismatches: u64,
    /// In-order prefix solved by elimination at the end of the run.
    pub eliminated_prefix: u64,
}

impl VerificationReport {
    pub fn disagreement_rate(&self) -> f64 {
        if self.opportunities == 0 {
            0.0
        } else {
            self.disagreements as f64 / self.opportunities as f64
        }
    }

    /// Slots of every measured rank event: dependent rows, collapses,
    /// cancelled top coefficients and certified coincidences.
    pub fn rank_event_slots(&self) -> Vec<Slot> {
        let mut v: Vec<Slot> = self
            .rank_deficiencies
            .iter()
            .chain(&self.prefix_collapses)
            .chain(&self.support_shrinks)
            .chain(&self.coincidences)
            .map(|&(_, s)| s)
            .collect();
        v.sort_unstable();
        v
    }

    /// Episodes with no rank event in the `lookback` slots up to their start.
    pub fn unexplained_episodes(&self, lookback: u64) -> Vec<Slot> {
        let events = self.rank_event_slots();
        self.episode_starts
            .iter()
            .copied()
            .filter(|&s| {
                let i = events.partition_point(|&e| e <= s);
                i == 0 || events[i - 1] + lookback < s
            })
            .collect()
    }

    /// Every disagreement episode starts within `lookback` slots after a
    /// measured rank event somewhere on the path.
    pub fn disagreements_explained(&self, lookback: u64) -> bool {
        self.unexplained_episodes(lookback).is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLedger {
    pub config: NetworkConfig,
    pub protocol: Protocol,
    /// `actions[node][slot]` for transmitting nodes `0..N−1`.
    pub actions: Vec<Vec<Action>>,
    /// Arrival slot of each information packet at the source.
    pub arrivals: Vec<Slot>,
    /// In-order decode slot at the destination for packets `0..decode_times.len()`.
    pub decode_times: Vec<Slot>,
    /// Cumulative in-order decoded count at the end of each slot.
    pub delivered: Vec<u64>,
    pub bsp_starts: Vec<BspStart>,
    pub bsp_checks: Vec<BspCheck>,
    pub verification: Option<VerificationReport>,
}

impl RunLedger {
    pub fn empty(config: NetworkConfig, protocol: Protocol) -> Self {
        let nodes = config.hops();
        RunLedger {
            config,
            protocol,
            actions: vec![Vec::new(); nodes],
            arrivals: Vec::new(),
            decode_times: Vec::new(),
            delivered: Vec::new(),
            bsp_starts: Vec::new(),
            bsp_checks: Vec::new(),
            verification: None,
        }
    }

    pub fn slots(&self) -> u64 {
        self.delivered.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.delivered.is_empty()
    }

    /// Idle slots of `node` after its first opportunity.
    pub fn idle_count(&self, node: usize) -> u64 {
        self.actions[node].iter().filter(|a| a.is_idle()).count() as u64
    }

    pub fn count(&self, node: usize, action: Action) -> u64 {
        self.actions[node].iter().filter(|&&a| a == action).count() as u64
    }

    /// Information packets decoded in order by the end of the run.
    pub fn decoded(&self) -> u64 {
        self.delivered.last().copied().unwrap_or(0)
    }

    pub fn undelivered(&self) -> u64 {
        self.arrivals.len() as u64 - self.decoded()
    }

    /// `slot,node,action` lines, slot-major.
    pub fn trace(&self) -> String {
        let mut out = String::from("slot,node,action\n");
        for t in 0..self.slots() as usize {
            for (node, acts) in self.actions.iter().enumerate() {
                let _ = writeln!(out, "{t},{node},{}", acts[t]);
            }
        }
        out
    }
}
