//! Source-side AC-RLNC rules: the posterior repair ratio, the a-priori burst
//! size and the node policies bound to each protocol.

use crate::types::{round_half_up, Protocol};

/// `(md + ε̂·c_new) / (ad + (1 − ε̂)·c_same) − 1`.
///
/// A zero denominator yields `+∞` when something is missing and `0`
/// otherwise.
pub fn delta_t(md_nack: u64, eps: f64, c_new: u64, ad_ack: u64, c_same: u64) -> f64 {
    let num = md_nack as f64 + eps * c_new as f64;
    let den = ad_ack as f64 + (1.0 - eps) * c_same as f64;
    if den == 0.0 {
        if num > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        num / den - 1.0
    }
}

/// Repair packets scheduled at an RTT boundary: `round(ε̂ · c_new)`.
pub fn apriori_count(eps: f64, c_new: u64) -> u64 {
    round_half_up(eps * c_new as f64)
}

/// When feedback-triggered repair fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PosteriorRule {
    /// Source form: `Δ − th > 0`.
    AboveThreshold(f64),
    /// Relay form: `Δ ≥ 0`, only once some loss is expected or observed.
    NonNegative,
}

impl PosteriorRule {
    pub fn fires(self, md_nack: u64, eps: f64, c_new: u64, ad_ack: u64, c_same: u64) -> bool {
        let delta = delta_t(md_nack, eps, c_new, ad_ack, c_same);
        match self {
            PosteriorRule::AboveThreshold(th) => delta - th > 0.0,
            PosteriorRule::NonNegative => {
                let missing = md_nack as f64 + eps * c_new as f64;
                missing > 0.0 && delta >= 0.0
            }
        }
    }
}

/// Knobs distinguishing the coded protocols at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePolicy {
    pub posterior: PosteriorRule,
    /// End of window triggers at `w_max − w_min ≥ w` (otherwise `> w`).
    pub eow_inclusive: bool,
    pub blank_space: bool,
    /// Replace every idle slot by a repair packet.
    pub fill_idle: bool,
    /// Window and repair accounting driven by destination reports.
    pub end_to_end: bool,
}

impl NodePolicy {
    /// Policy for the coded node at `node` under `protocol`, or `None` when
    /// that node runs something else (mixing relay, ARQ).
    pub fn for_node(protocol: Protocol, node: usize, threshold: f64) -> Option<NodePolicy> {
        let source = node == 0;
        let posterior = if source {
            PosteriorRule::AboveThreshold(threshold)
        } else {
            PosteriorRule::NonNegative
        };
        match protocol {
            Protocol::BlankSpace => Some(NodePolicy {
                posterior,
                eow_inclusive: source,
                blank_space: true,
                fill_idle: false,
                end_to_end: false,
            }),
            Protocol::NetFec => Some(NodePolicy {
                posterior,
                eow_inclusive: source,
                blank_space: false,
                fill_idle: true,
                end_to_end: false,
            }),
            Protocol::MpMh if source => Some(NodePolicy {
                posterior,
                eow_inclusive: true,
                blank_space: false,
                fill_idle: true,
                end_to_end: true,
            }),
            Protocol::MpMh | Protocol::SrArq => None,
        }
    }
}
