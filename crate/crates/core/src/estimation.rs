//! Erasure-rate estimation, forward bottleneck selection and upstream
//! aggregation of downstream acknowledgements.

use crate::error::SimError;
use crate::types::{AckTriple, FeedbackBundle, SinkReport, Slot};

/// `1 − mean(acks)`; zero before any evidence.
pub fn erasure_estimate(acks: &[bool]) -> f64 {
    if acks.is_empty() {
        return 0.0;
    }
    let ones = acks.iter().filter(|&&a| a).count();
    1.0 - ones as f64 / acks.len() as f64
}

/// Index of the largest entry of `estimates` at or after `from`, ties going
/// to the smallest index. `estimates[i]` is the estimate for channel `i`.
pub fn bottleneck_of(estimates: &[f64], from: usize) -> usize {
    let mut best = from;
    for (i, &e) in estimates.iter().enumerate().skip(from + 1) {
        if e > estimates[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct History {
    acks: u64,
    total: u64,
}

impl History {
    fn push(&mut self, ack: bool) {
        self.total += 1;
        self.acks += u64::from(ack);
    }

    fn estimate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            1.0 - self.acks as f64 / self.total as f64
        }
    }
}

/// Feedback-derived view of the channels from node `n` to the destination.
///
/// Histories are kept as running counts: every bit ever received for a
/// channel contributes equally, so the estimate equals `1 − mean(acks)`.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    node: usize,
    hops: usize,
    histories: Vec<History>,
    outbox: Vec<AckTriple>,
    sink_report: Option<SinkReport>,
}

impl EstimatorState {
    /// Estimator for `node` on a chain with `hops` forward channels.
    pub fn new(node: usize, hops: usize) -> Self {
        EstimatorState {
            node,
            hops,
            histories: vec![History::default(); hops.saturating_sub(node)],
            outbox: Vec::new(),
            sink_report: None,
        }
    }

    pub fn node(&self) -> usize {
        self.node
    }

    /// Fold one bundle received from the downstream neighbour.
    pub fn ingest(&mut self, fb: &FeedbackBundle) -> Result<(), SimError> {
        if let Some(bad) = fb
            .downstream
            .iter()
            .find(|tr| tr.channel <= self.node || tr.channel >= self.hops)
        {
            return Err(SimError::MalformedBundle {
                node: self.node,
                channel: bad.channel,
            });
        }
        self.record(AckTriple {
            channel: self.node,
            slot: fb.observed_at,
            ack: fb.ack,
        });
        for &tr in &fb.downstream {
            self.record(tr);
        }
        if let Some(rep) = fb.sink_report {
            if self
                .sink_report
                .is_none_or(|old| old.observed_at < rep.observed_at)
            {
                self.sink_report = Some(rep);
            }
        }
        Ok(())
    }

    fn record(&mut self, tr: AckTriple) {
        self.histories[tr.channel - self.node].push(tr.ack);
        if self.node > 0 {
            self.outbox.push(tr);
        }
    }

    /// Current estimate for `channel` (must be `>= node`).
    pub fn estimate(&self, channel: usize) -> f64 {
        self.histories[channel - self.node].estimate()
    }

    pub fn samples(&self, channel: usize) -> u64 {
        self.histories[channel - self.node].total
    }

    /// Estimates indexed by absolute channel number; entries before this
    /// node are zero.
    pub fn estimates(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.hops];
        for (i, h) in self.histories.iter().enumerate() {
            out[self.node + i] = h.estimate();
        }
        out
    }

    /// Worst estimated channel between this node and the destination.
    pub fn bottleneck(&self) -> usize {
        bottleneck_of(&self.estimates(), self.node)
    }

    /// Largest estimate over the remaining path.
    pub fn worst_estimate(&self) -> f64 {
        self.estimate(self.bottleneck())
    }

    pub fn sink_report(&self) -> Option<SinkReport> {
        self.sink_report
    }

    pub fn pending_triples(&self) -> usize {
        self.outbox.len()
    }

    /// Feedback for the packet this node just observed from upstream. Carries
    /// every downstream triple not yet forwarded, and the freshest sink report.
    pub fn build_outgoing_bundle(
        &mut self,
        ack: bool,
        innovative: bool,
        acked_packet_created_at: Slot,
        observed_at: Slot,
    ) -> FeedbackBundle {
        FeedbackBundle {
            acked_packet_created_at,
            observed_at,
            ack,
            innovative,
            downstream: std::mem::take(&mut self.outbox),
            sink_report: self.sink_report,
        }
    }
}
