//! The coded node state machine shared by the source and the re-encoding
//! relays, including blank-space pausing.
//!
//! One slot at a node runs, in order: a-priori repair burst, blank-space
//! period, then the no-new/no-FEC block (end-of-window or posterior repair,
//! else a new symbol, else idle). Feedback and estimates are folded in by the
//! caller before [`AcNode::step`].

use crate::coder::{Account, HopAccount, PathAccount};
use crate::config::{LogBase, NetworkConfig};
use crate::error::{violation, SimError};
use crate::estimation::EstimatorState;
use crate::ledger::{Action, BspCheck, BspStart};
use crate::source::{apriori_count, NodePolicy};
use crate::types::{FeedbackBundle, PacketKind, Slot, Span};

/// Blank-space budget `α · Σ_{i=n+1}^{BN} RTTᵢ · ε̂ᵢ`; zero at the bottleneck.
pub fn bs_duration(
    node: usize,
    bottleneck: usize,
    rtts: &[u64],
    estimates: &[f64],
    alpha: f64,
) -> f64 {
    if bottleneck <= node {
        return 0.0;
    }
    alpha
        * (node + 1..=bottleneck)
            .map(|i| rtts[i] as f64 * estimates[i])
            .sum::<f64>()
}

/// Effective DoF rate while pausing:
/// `1 / [(1 − ε̂ₙ) · BS + h · log(ε̂_BN − ε̂ₙ)]`, or `+∞` when the log
/// argument or the bracket is not positive.
pub fn bs_dof_rate(
    eps_node: f64,
    eps_bottleneck: f64,
    hops_to_bottleneck: usize,
    remaining: f64,
    log: LogBase,
) -> f64 {
    let gap = eps_bottleneck - eps_node;
    if gap <= 0.0 {
        return f64::INFINITY;
    }
    let bracket = (1.0 - eps_node) * remaining + hops_to_bottleneck as f64 * log.apply(gap);
    if bracket <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / bracket
    }
}

/// Pausing further would push the DoF rate above what the bottleneck can
/// carry: stop the blank-space period.
pub fn bsp_terminates(dof_rate: f64, eps_bottleneck: f64) -> bool {
    dof_rate > 1.0 - eps_bottleneck
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emission {
    pub span: Span,
    pub kind: PacketKind,
    /// Keep-alive repair over an already delivered symbol; carries no
    /// information.
    pub filler: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: Action,
    pub emission: Option<Emission>,
    pub bsp_start: Option<BspStart>,
    pub bsp_check: Option<BspCheck>,
}

impl Decision {
    fn idle(action: Action) -> Self {
        Decision {
            action,
            emission: None,
            bsp_start: None,
            bsp_check: None,
        }
    }

    fn send(span: Span, kind: PacketKind) -> Self {
        Decision {
            action: kind.into(),
            emission: Some(Emission {
                span,
                kind,
                filler: false,
            }),
            bsp_start: None,
            bsp_check: None,
        }
    }
}

/// Coded transmitter at one node (source or relay).
#[derive(Debug, Clone)]
pub struct AcNode {
    node: usize,
    /// Period of the a-priori schedule.
    rtt: u64,
    start: Slot,
    policy: NodePolicy,
    window_cap: u64,
    alpha: f64,
    log: LogBase,
    rtts: Vec<u64>,
    account: Account,
    w_max: Option<u64>,
    next_period: Slot,
    pending_apriori: u64,
    bsp_armed: bool,
    bs_remaining: f64,
    /// New and repair transmissions in the current period.
    c_new: u64,
    c_same: u64,
}

impl AcNode {
    pub fn new(node: usize, cfg: &NetworkConfig, policy: NodePolicy) -> Self {
        let (rtt, account) = if policy.end_to_end {
            let path_delay = cfg.start_slot(cfg.hops());
            (
                cfg.global_rtt(),
                Account::Path(PathAccount::new(path_delay)),
            )
        } else {
            (cfg.rtt_per_hop[node], Account::Hop(HopAccount::new()))
        };
        let start = cfg.start_slot(node);
        AcNode {
            node,
            rtt,
            start,
            policy,
            window_cap: cfg.window_cap(),
            alpha: cfg.alpha,
            log: cfg.bs_log,
            rtts: cfg.rtt_per_hop.clone(),
            account,
            w_max: None,
            next_period: start + rtt,
            pending_apriori: 0,
            bsp_armed: false,
            bs_remaining: 0.0,
            c_new: 0,
            c_same: 0,
        }
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn policy(&self) -> NodePolicy {
        self.policy
    }

    /// Lowest symbol still inside the coding window.
    pub fn floor(&self) -> u64 {
        self.account.floor()
    }

    pub fn w_max(&self) -> Option<u64> {
        self.w_max
    }

    pub fn bs_remaining(&self) -> f64 {
        self.bs_remaining
    }

    pub fn pending_apriori(&self) -> u64 {
        self.pending_apriori
    }

    /// Fold in a bundle already ingested by `est`.
    pub fn on_feedback(
        &mut self,
        fb: &FeedbackBundle,
        est: &EstimatorState,
    ) -> Result<(), SimError> {
        match &mut self.account {
            Account::Hop(a) => a.on_feedback(fb),
            Account::Path(a) => {
                if let Some(rep) = est.sink_report() {
                    a.on_report(rep);
                }
                Ok(())
            }
        }
    }

    fn link_estimate(&self, est: &EstimatorState) -> f64 {
        if self.policy.end_to_end {
            est.worst_estimate()
        } else {
            est.estimate(self.node)
        }
    }

    fn emit(&mut self, t: Slot, decision: Decision) -> Decision {
        if let Some(e) = decision.emission {
            self.account.on_sent(t, e.span, e.kind);
            if e.kind == PacketKind::New {
                self.w_max = Some(e.span.hi);
                self.c_new += 1;
            } else {
                self.c_same += 1;
            }
        }
        decision
    }

    /// Decide slot `t`. `available` is the number of symbols this node can
    /// code over (arrived packets at the source, stored DoFs at a relay).
    pub fn step(
        &mut self,
        t: Slot,
        available: u64,
        est: &EstimatorState,
    ) -> Result<Decision, SimError> {
        if t < self.start {
            return Err(violation(format!(
                "node {} stepped at slot {t} before its start slot {}",
                self.node, self.start
            )));
        }
        let eps = self.link_estimate(est);
        if t >= self.next_period {
            self.pending_apriori = apriori_count(eps, self.c_new);
            self.c_new = 0;
            self.c_same = 0;
            self.next_period += self.rtt;
            if self.pending_apriori == 0 {
                self.bsp_armed = true;
            }
        }

        let floor = self.account.floor();
        let window = self
            .w_max
            .filter(|&hi| hi >= floor)
            .map(|hi| Span::new(floor, hi));

        if self.pending_apriori > 0 {
            self.pending_apriori -= 1;
            if self.pending_apriori == 0 {
                self.bsp_armed = true;
            }
            match window {
                Some(w) => return Ok(self.emit(t, Decision::send(w, PacketKind::FecAPriori))),
                None => {
                    self.pending_apriori = 0;
                    self.bsp_armed = true;
                }
            }
        }

        let mut bsp_start = None;
        let mut bsp_check = None;
        if self.policy.blank_space {
            let bottleneck = est.bottleneck();
            if self.bsp_armed {
                self.bsp_armed = false;
                let duration = bs_duration(
                    self.node,
                    bottleneck,
                    &self.rtts,
                    &est.estimates(),
                    self.alpha,
                );
                bsp_start = Some(BspStart {
                    node: self.node,
                    slot: t,
                    bottleneck,
                    duration,
                });
                self.bs_remaining = if duration >= 1.0 { duration } else { 0.0 };
            }
            if bottleneck == self.node {
                self.bs_remaining = 0.0;
            }
            if self.bs_remaining >= 1.0 {
                let eps_bn = est.estimate(bottleneck);
                let rate = bs_dof_rate(
                    eps,
                    eps_bn,
                    bottleneck - self.node,
                    self.bs_remaining,
                    self.log,
                );
                let stop = bsp_terminates(rate, eps_bn);
                bsp_check = Some(BspCheck {
                    node: self.node,
                    slot: t,
                    bottleneck,
                    remaining: self.bs_remaining,
                    eps_node: eps,
                    dof_rate: rate,
                    bound: 1.0 - eps_bn,
                    idled: !stop,
                });
                if stop {
                    self.bs_remaining = 0.0;
                } else {
                    self.bs_remaining -= 1.0;
                    if self.bs_remaining < 1.0 {
                        self.bs_remaining = 0.0;
                    }
                    return Ok(Decision {
                        action: Action::BspIdle,
                        emission: None,
                        bsp_start,
                        bsp_check,
                    });
                }
            }
        }

        let mut decision = self.no_new_no_fec(available, eps, window);
        decision.bsp_start = bsp_start;
        decision.bsp_check = bsp_check;
        Ok(self.emit(t, decision))
    }

    fn no_new_no_fec(&mut self, available: u64, eps: f64, window: Option<Span>) -> Decision {
        if let Some(w) = window {
            let width = w.hi - w.lo;
            let eow = if self.policy.eow_inclusive {
                width >= self.window_cap
            } else {
                width > self.window_cap
            };
            if eow {
                return Decision::send(w, PacketKind::FecEow);
            }
            let c = self.account.counters();
            if self
                .policy
                .posterior
                .fires(c.md_nack, eps, self.c_new, c.ad_ack, self.c_same)
            {
                return Decision::send(w, PacketKind::FecPosterior);
            }
        }
        let next = self.w_max.map_or(0, |h| h + 1);
        if next < available {
            return Decision::send(Span::new(self.account.floor(), next), PacketKind::New);
        }
        if self.policy.fill_idle {
            if let Some(w) = window {
                return Decision::send(w, PacketKind::FecPosterior);
            }
            if let Some(hi) = self.w_max {
                let mut d = Decision::send(Span::single(hi), PacketKind::FecPosterior);
                if let Some(e) = d.emission.as_mut() {
                    e.filler = true;
                }
                return d;
            }
        }
        Decision::idle(Action::NnfIdle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AckTriple, Protocol};

    #[test]
    fn duration_examples() {
        let rtts = [20; 5];
        let eps = [0.1, 0.4, 0.3, 0.3, 0.1];
        assert!((bs_duration(0, 1, &rtts, &eps, 1.0) - 8.0).abs() < 1e-12);
        assert_eq!(bs_duration(1, 1, &rtts, &eps, 1.0), 0.0);
        let eps = [0.1, 0.4, 0.6, 0.3, 0.1];
        assert!((bs_duration(0, 2, &rtts, &eps, 1.0) - 20.0).abs() < 1e-12);
        assert!((bs_duration(0, 2, &rtts, &eps, 0.5) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn dof_rate_examples() {
        let r = bs_dof_rate(0.1, 0.4, 1, 8.0, LogBase::Ln);
        let oracle = 1.0 / (0.9 * 8.0 + 0.3f64.ln());
        assert!((r - oracle).abs() <= 1e-12 * oracle);
        assert!((r - 1.0 / 5.9960).abs() < 1e-4);
        assert_eq!(bs_dof_rate(0.1, 0.4, 1, 1.0, LogBase::Ln), f64::INFINITY);
        assert_eq!(bs_dof_rate(0.3, 0.3, 2, 10.0, LogBase::Ln), f64::INFINITY);
        assert_eq!(bs_dof_rate(0.5, 0.3, 2, 10.0, LogBase::Ln), f64::INFINITY);
    }

    #[test]
    fn termination_rule() {
        assert!(bsp_terminates(0.7, 0.4));
        assert!(!bsp_terminates(0.6, 0.4));
        assert!(!bsp_terminates(0.1668, 0.4));
        assert!(bsp_terminates(f64::INFINITY, 0.4));
    }

    fn estimator_with(node: usize, eps: &[f64]) -> EstimatorState {
        let hops = eps.len();
        let mut est = EstimatorState::new(node, hops);
        for _ in 0..100 {
            let mut downstream = Vec::new();
            for (ch, &e) in eps.iter().enumerate().skip(node + 1) {
                for k in 0..10 {
                    downstream.push(AckTriple {
                        channel: ch,
                        slot: 0,
                        ack: k >= (e * 10.0).round() as usize,
                    });
                }
            }
            for k in 0..10 {
                let fb = FeedbackBundle {
                    acked_packet_created_at: 0,
                    observed_at: 0,
                    ack: k >= (eps[node] * 10.0).round() as usize,
                    innovative: false,
                    downstream: if k == 0 {
                        std::mem::take(&mut downstream)
                    } else {
                        Vec::new()
                    },
                    sink_report: None,
                };
                est.ingest(&fb).unwrap();
            }
        }
        est
    }

    #[test]
    fn empty_buffer_idles_without_repair() {
        let cfg = NetworkConfig::six_node(0.3);
        let policy = NodePolicy::for_node(Protocol::BlankSpace, 0, 0.0).unwrap();
        let mut node = AcNode::new(0, &cfg, policy);
        let est = EstimatorState::new(0, 5);
        let d = node.step(0, 0, &est).unwrap();
        assert_eq!(d.action, Action::NnfIdle);
        let d = node.step(1, 1, &est).unwrap();
        assert_eq!(d.action, Action::New);
        assert_eq!(d.emission.unwrap().span, Span::single(0));
    }

    #[test]
    fn netfec_fills_idle_slots() {
        let cfg = NetworkConfig::six_node(0.3);
        let policy = NodePolicy::for_node(Protocol::NetFec, 0, 0.0).unwrap();
        let mut node = AcNode::new(0, &cfg, policy);
        let est = EstimatorState::new(0, 5);
        assert_eq!(node.step(0, 0, &est).unwrap().action, Action::NnfIdle);
        assert_eq!(node.step(1, 1, &est).unwrap().action, Action::New);
        let d = node.step(2, 1, &est).unwrap();
        assert_eq!(d.action, Action::FecPosterior);
        assert_eq!(d.emission.unwrap().span, Span::single(0));
    }

    #[test]
    fn window_cap_forces_repair() {
        let mut cfg = NetworkConfig::six_node(0.3);
        cfg.max_window = Some(3);
        let policy = NodePolicy::for_node(Protocol::BlankSpace, 0, 0.0).unwrap();
        let mut node = AcNode::new(0, &cfg, policy);
        let est = EstimatorState::new(0, 5);
        for t in 0..4 {
            assert_eq!(node.step(t, 100, &est).unwrap().action, Action::New);
        }
        let d = node.step(4, 100, &est).unwrap();
        assert_eq!(d.action, Action::FecEow);
        assert_eq!(d.emission.unwrap().span, Span::new(0, 3));
    }

    #[test]
    fn blank_space_idles_then_terminates() {
        let mut cfg = NetworkConfig::six_node(0.3);
        cfg.alpha = 1.0;
        let policy = NodePolicy::for_node(Protocol::BlankSpace, 0, 0.0).unwrap();
        let mut node = AcNode::new(0, &cfg, policy);
        let est = estimator_with(0, &[0.1, 0.4, 0.3, 0.3, 0.1]);
        assert_eq!(est.bottleneck(), 1);
        node.bsp_armed = true;
        let mut idles = 0;
        let mut t = 0;
        loop {
            let d = node.step(t, 0, &est).unwrap();
            if let Some(s) = d.bsp_start {
                assert!((s.duration - 8.0).abs() < 1e-9);
            }
            match d.bsp_check {
                Some(c) if c.idled => {
                    assert_eq!(d.action, Action::BspIdle);
                    assert!(c.dof_rate <= c.bound);
                    idles += 1;
                }
                Some(c) => {
                    assert!(c.dof_rate > c.bound);
                    assert_ne!(d.action, Action::BspIdle);
                    break;
                }
                None => break,
            }
            t += 1;
        }
        // Remaining 8,7,6,5,4 pass; at 3 the bracket drops below 1/0.6.
        assert_eq!(idles, 5);
    }

    #[test]
    fn bottleneck_node_never_pauses() {
        let cfg = NetworkConfig::six_node(0.3);
        let policy = NodePolicy::for_node(Protocol::BlankSpace, 1, 0.0).unwrap();
        let mut node = AcNode::new(1, &cfg, policy);
        let est = estimator_with(1, &[0.1, 0.4, 0.3, 0.3, 0.1]);
        node.bsp_armed = true;
        let d = node.step(10, 0, &est).unwrap();
        assert_eq!(d.bsp_start.unwrap().duration, 0.0);
        assert!(d.bsp_check.is_none());
        assert_eq!(node.bs_remaining(), 0.0);
    }
}
