//! The slotted event loop.
//!
//! Within slot `t`: draw the source arrival, poll every channel, step the
//! transmitting nodes in index order (each first answers what it received
//! from upstream, then folds in feedback from downstream, then decides),
//! let the destination absorb, and record the slot.

use rand::Rng;
use rayon::prelude::*;

use crate::baselines::{ArqSender, MixingRelay};
use crate::channel::{ChannelInstance, Observation, Polled};
use crate::config::NetworkConfig;
use crate::error::{violation, SimError};
use crate::estimation::EstimatorState;
use crate::gf::{self, Row};
use crate::ledger::{Action, RunLedger, VerificationReport};
use crate::net::{AcNode, Decision, Emission};
use crate::oracle::generic_prefix;
use crate::receiver::{Receiver, Reception, SeqIntake};
use crate::rng::{self, SimRng, Stream};
use crate::sink::SinkState;
use crate::source::NodePolicy;
use crate::types::{CodedPacket, Coding, Protocol, Slot};

#[derive(Debug, Clone)]
enum Transmitter {
    Coded(AcNode),
    Mixing(MixingRelay),
    Arq(ArqSender),
}

#[derive(Debug, Clone)]
enum Intake {
    Coded(Receiver),
    Uncoded(SeqIntake),
}

/// One configured run, steppable slot by slot.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: NetworkConfig,
    protocol: Protocol,
    verify: bool,
    lambda: f64,
    t: Slot,
    channels: Vec<ChannelInstance>,
    estimators: Vec<EstimatorState>,
    transmitters: Vec<Transmitter>,
    /// Receiving side of relays `1..N−1` (index `n − 1`).
    intakes: Vec<Intake>,
    sink: SinkState,
    arrival_rng: SimRng,
    payload_rng: SimRng,
    coeff_rngs: Vec<SimRng>,
    redraw_rng: SimRng,
    payloads: Vec<Vec<u8>>,
    ledger: RunLedger,
    report: VerificationReport,
    payloads_checked: u64,
    disagreeing: bool,
}

impl Simulation {
    pub fn new(cfg: &NetworkConfig, protocol: Protocol) -> Result<Self, SimError> {
        Self::build(cfg, protocol, false)
    }

    /// Like [`Simulation::new`] but carrying real GF(2^8) coefficients and
    /// payloads, cross-checking DoF counting against elimination.
    pub fn verified(cfg: &NetworkConfig, protocol: Protocol) -> Result<Self, SimError> {
        Self::build(cfg, protocol, protocol.is_coded())
    }

    fn build(cfg: &NetworkConfig, protocol: Protocol, verify: bool) -> Result<Self, SimError> {
        cfg.validate().map_err(SimError::Config)?;
        let hops = cfg.hops();
        let seed = cfg.seed;
        let channels = (0..hops)
            .map(|n| ChannelInstance::new(n, cfg.erasure_rates[n], cfg.rtt_per_hop[n], seed))
            .collect();
        let estimators = (0..hops).map(|n| EstimatorState::new(n, hops)).collect();
        let transmitters = (0..hops)
            .map(|n| match NodePolicy::for_node(protocol, n, cfg.threshold) {
                Some(policy) => Transmitter::Coded(AcNode::new(n, cfg, policy)),
                None if protocol == Protocol::MpMh => Transmitter::Mixing(MixingRelay::new()),
                None => Transmitter::Arq(ArqSender::new(cfg.rtt_per_hop[n])),
            })
            .collect();
        let intakes = (1..hops)
            .map(|_| {
                if protocol.is_coded() {
                    Intake::Coded(Receiver::new(verify))
                } else {
                    Intake::Uncoded(SeqIntake::new())
                }
            })
            .collect();
        let sink = if protocol.is_coded() {
            SinkState::coded(verify)
        } else {
            SinkState::uncoded()
        };
        let mut ledger = RunLedger::empty(cfg.clone(), protocol);
        for acts in &mut ledger.actions {
            acts.reserve(cfg.horizon as usize);
        }
        Ok(Simulation {
            cfg: cfg.clone(),
            protocol,
            verify,
            lambda: cfg.lambda(),
            t: 0,
            channels,
            estimators,
            transmitters,
            intakes,
            sink,
            arrival_rng: rng::stream(seed, Stream::Arrivals),
            payload_rng: rng::stream(seed, Stream::Payloads),
            coeff_rngs: (0..hops)
                .map(|n| rng::stream(seed, Stream::Coefficients(n)))
                .collect(),
            redraw_rng: rng::stream(seed, Stream::Redraw),
            payloads: Vec::new(),
            ledger,
            report: VerificationReport::default(),
            payloads_checked: 0,
            disagreeing: false,
        })
    }

    pub fn slot(&self) -> Slot {
        self.t
    }

    pub fn is_finished(&self) -> bool {
        self.t >= self.cfg.horizon
    }

    pub fn ledger(&self) -> &RunLedger {
        &self.ledger
    }

    /// Advance one slot.
    pub fn step(&mut self) -> Result<(), SimError> {
        let t = self.t;
        let hops = self.cfg.hops();

        if self.arrival_rng.random::<f64>() < self.lambda {
            let index = self.ledger.arrivals.len() as u64;
            self.ledger.arrivals.push(t);
            if self.verify {
                let mut p = vec![0u8; self.cfg.payload_len];
                self.payload_rng.fill(&mut p[..]);
                self.payloads.push(p);
            }
            if let Transmitter::Arq(s) = &mut self.transmitters[0] {
                s.offer(index);
            }
        }

        let mut polled: Vec<Polled> = self.channels.iter_mut().map(|c| c.poll(t)).collect();

        for n in 0..hops {
            if n > 0 {
                if let Some(obs) = polled[n - 1].forward.take() {
                    self.relay_observe(n, obs, t)?;
                }
            }
            if t < self.cfg.start_slot(n) {
                self.ledger.actions[n].push(Action::PreOp);
                continue;
            }
            if let Some(fb) = polled[n].feedback.take() {
                self.estimators[n].ingest(&fb)?;
                match &mut self.transmitters[n] {
                    Transmitter::Coded(node) => node.on_feedback(&fb, &self.estimators[n])?,
                    Transmitter::Arq(s) => s.on_feedback(&fb)?,
                    Transmitter::Mixing(_) => {}
                }
            }
            let decision = self.decide(n, t)?;
            if let Some(s) = decision.bsp_start {
                self.ledger.bsp_starts.push(s);
            }
            if let Some(c) = decision.bsp_check {
                self.ledger.bsp_checks.push(c);
            }
            if let Some(e) = decision.emission {
                let pkt = self.build_packet(n, t, e)?;
                self.channels[n].push_forward(t, pkt)?;
            }
            self.ledger.actions[n].push(decision.action);
        }

        if let Some(obs) = polled[hops - 1].forward.take() {
            self.sink_observe(obs, t)?;
        }
        self.ledger.delivered.push(self.sink.decoded());
        self.t += 1;
        Ok(())
    }

    fn decide(&mut self, n: usize, t: Slot) -> Result<Decision, SimError> {
        let held = match n {
            0 => self.ledger.arrivals.len() as u64,
            _ => match &self.intakes[n - 1] {
                Intake::Coded(rx) => rx.held(),
                Intake::Uncoded(_) => 0,
            },
        };
        match &mut self.transmitters[n] {
            Transmitter::Coded(node) => {
                let d = node.step(t, held, &self.estimators[n])?;
                if n > 0 {
                    if let Intake::Coded(rx) = &mut self.intakes[n - 1] {
                        rx.prune_below(
                            node.floor().min(d.emission.map_or(u64::MAX, |e| e.span.lo)),
                        );
                    }
                }
                Ok(d)
            }
            Transmitter::Mixing(relay) => Ok(relay.step(held)),
            Transmitter::Arq(sender) => Ok(sender.step(t)),
        }
    }

    fn note_reception(&mut self, node: usize, rec: Reception, t: Slot) {
        if rec.rank_deficient {
            self.report.rank_deficiencies.push((node, t));
        }
        if rec.collapsed {
            self.report.prefix_collapses.push((node, t));
        }
        if rec.unexpected {
            self.report.unexpected_innovations += 1;
        }
    }

    fn relay_observe(&mut self, n: usize, obs: Observation, t: Slot) -> Result<(), SimError> {
        let (ack, innovative) = match (&obs.packet, &mut self.intakes[n - 1]) {
            (None, _) => (false, false),
            (Some(pkt), Intake::Coded(rx)) => {
                let rec = rx.receive(pkt)?;
                self.note_reception(n, rec, t);
                (true, rec.innovative)
            }
            (Some(pkt), Intake::Uncoded(rx)) => {
                let fresh = rx.receive(pkt.span.lo);
                if fresh {
                    if let Transmitter::Arq(s) = &mut self.transmitters[n] {
                        s.offer(pkt.span.lo);
                    }
                }
                (true, fresh)
            }
        };
        let bundle = self.estimators[n].build_outgoing_bundle(ack, innovative, obs.created_at, t);
        self.channels[n - 1].push_feedback(t, bundle)
    }

    fn sink_observe(&mut self, obs: Observation, t: Slot) -> Result<(), SimError> {
        let (ack, innovative) = match &obs.packet {
            None => (false, false),
            Some(pkt) => {
                let relays: Vec<&Receiver> = self
                    .intakes
                    .iter()
                    .filter_map(|i| match i {
                        Intake::Coded(rx) => Some(rx),
                        Intake::Uncoded(_) => None,
                    })
                    .collect();
                let absorbed = self.sink.absorb(pkt, t, &relays)?;
                if absorbed.newly_decoded.end > self.ledger.arrivals.len() as u64 {
                    return Err(violation(format!(
                        "destination decoded packet {} before it arrived at the source",
                        absorbed.newly_decoded.end - 1
                    )));
                }
                self.note_reception(self.cfg.hops(), absorbed.reception, t);
                if self.verify {
                    self.cross_check(t);
                }
                (true, absorbed.reception.innovative)
            }
        };
        let fb = self.sink.emit_feedback(ack, innovative, obs.created_at, t);
        self.channels[self.cfg.hops() - 1].push_feedback(t, fb)
    }

    fn cross_check(&mut self, t: Slot) {
        let Some(dec) = self.sink.receiver().and_then(|r| r.decoder()) else {
            return;
        };
        let eliminated = dec.solved_prefix();
        self.report.opportunities += 1;
        if eliminated != self.sink.decoded() {
            if !self.disagreeing {
                self.report.episode_starts.push(t);
                let mut path: Vec<&Receiver> = self
                    .intakes
                    .iter()
                    .filter_map(|i| match i {
                        Intake::Coded(rx) => Some(rx),
                        Intake::Uncoded(_) => None,
                    })
                    .collect();
                path.extend(self.sink.receiver());
                let counted = self.sink.decoded();
                if generic_prefix(&path, &mut self.redraw_rng) == counted {
                    self.report.coincidences.push((self.cfg.hops(), t));
                }
            }
            self.report.disagreements += 1;
            self.report.disagreement_slots.push(t);
        }
        self.disagreeing = eliminated != self.sink.decoded();
        while self.payloads_checked < eliminated {
            let i = self.payloads_checked;
            if dec.payload(i) != Some(&self.payloads[i as usize][..]) {
                self.report.payload_mismatches += 1;
            }
            self.payloads_checked += 1;
        }
        self.report.eliminated_prefix = eliminated;
    }

    fn build_packet(&mut self, n: usize, t: Slot, e: Emission) -> Result<CodedPacket, SimError> {
        let coding = if !self.verify {
            None
        } else if e.filler {
            Some(Coding {
                row: Row::zero(self.cfg.payload_len),
                local: vec![0; e.span.len() as usize],
            })
        } else {
            let width = e.span.len() as usize;
            let rng = &mut self.coeff_rngs[n];
            let mu: Vec<u8> = (0..width).map(|_| rng.random_range(1..=255u8)).collect();
            let row = if n == 0 {
                let packets: Vec<&[u8]> = (e.span.lo..=e.span.hi)
                    .map(|i| self.payloads[i as usize].as_slice())
                    .collect();
                let payload = gf::encode(&packets, &mu)?;
                Row::new(e.span.lo, mu.clone(), payload)
            } else {
                let Intake::Coded(rx) = &self.intakes[n - 1] else {
                    return Err(violation("coded emission from an uncoded relay"));
                };
                let rows = (e.span.lo..=e.span.hi)
                    .map(|m| {
                        rx.held_row(m).ok_or_else(|| {
                            violation(format!("node {n} codes over dropped symbol {m}"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let row = gf::recode(&rows, &mu)?;
                let expected = rows.iter().filter_map(|r| r.top()).max();
                if row.top() < expected {
                    self.report.support_shrinks.push((n, t));
                }
                row
            };
            Some(Coding { row, local: mu })
        };
        Ok(CodedPacket {
            origin: n,
            created_at: t,
            span: e.span,
            kind: e.kind,
            coding,
        })
    }

    /// Run the remaining slots and hand back the ledger.
    pub fn finish(mut self) -> Result<RunLedger, SimError> {
        while !self.is_finished() {
            self.step()?;
        }
        let mut ledger = self.ledger;
        ledger.decode_times = self.sink.into_decode_times();
        if self.verify {
            ledger.verification = Some(self.report);
        }
        Ok(ledger)
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }
}

/// Run `protocol` on `cfg` for the full horizon. A zero horizon yields an
/// empty ledger.
pub fn run(cfg: &NetworkConfig, protocol: Protocol) -> Result<RunLedger, SimError> {
    if cfg.horizon == 0 {
        return Ok(RunLedger::empty(cfg.clone(), protocol));
    }
    Simulation::new(cfg, protocol)?.finish()
}

/// [`run`] in verification mode.
pub fn run_verified(cfg: &NetworkConfig, protocol: Protocol) -> Result<RunLedger, SimError> {
    if cfg.horizon == 0 {
        return Ok(RunLedger::empty(cfg.clone(), protocol));
    }
    Simulation::verified(cfg, protocol)?.finish()
}

/// One cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub value: f64,
    pub protocol: Protocol,
    pub seed: u64,
    pub ledger: RunLedger,
}

/// Cross product of `values × protocols × seeds`, run in parallel. Seeds are
/// `base.seed, base.seed + 1, …`. Results come back ordered by value, then
/// protocol, then seed.
pub fn sweep(
    base: &NetworkConfig,
    parameter: &str,
    values: &[f64],
    protocols: &[Protocol],
    seeds: u64,
    verify: bool,
) -> Result<Vec<SweepResult>, SimError> {
    base.clone()
        .apply_parameter(parameter, values.first().copied().unwrap_or(0.0))
        .map_err(|e| SimError::Config(vec![e]))?;
    let mut jobs = Vec::new();
    for &value in values {
        for &protocol in protocols {
            for k in 0..seeds {
                let mut cfg = base.clone();
                cfg.apply_parameter(parameter, value)
                    .map_err(|e| SimError::Config(vec![e]))?;
                cfg.seed = base.seed.wrapping_add(k);
                jobs.push((value, protocol, cfg));
            }
        }
    }
    jobs.into_par_iter()
        .map(|(value, protocol, cfg)| {
            let ledger = if verify {
                run_verified(&cfg, protocol)?
            } else {
                run(&cfg, protocol)?
            };
            Ok(SweepResult {
                value,
                protocol,
                seed: cfg.seed,
                ledger,
            })
        })
        .collect()
}
