//! Binary erasure forward channel with a fixed propagation delay, paired with
//! a noiseless reverse line for feedback.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{violation, SimError};
use crate::rng::{self, SimRng, Stream};
use crate::types::{CodedPacket, FeedbackBundle, Slot};

/// What the receiving end of a forward channel sees in a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Transmission slot of the packet.
    pub created_at: Slot,
    /// `None` when the channel erased the packet.
    pub packet: Option<CodedPacket>,
}

impl Observation {
    pub fn is_erased(&self) -> bool {
        self.packet.is_none()
    }
}

/// Deliveries due at one slot.
#[derive(Debug, Default)]
pub struct Polled {
    pub forward: Option<Observation>,
    pub feedback: Option<FeedbackBundle>,
}

#[derive(Debug, Clone)]
pub struct ChannelInstance {
    index: usize,
    erasure_rate: f64,
    delay: u64,
    forward: VecDeque<(Slot, Observation)>,
    feedback: VecDeque<(Slot, FeedbackBundle)>,
    last_forward: Option<Slot>,
    last_feedback: Option<Slot>,
    rng: SimRng,
}

impl ChannelInstance {
    /// Hop `index` with erasure probability `erasure_rate` and round trip `rtt`.
    pub fn new(index: usize, erasure_rate: f64, rtt: u64, seed: u64) -> Self {
        ChannelInstance {
            index,
            erasure_rate,
            delay: rtt / 2,
            forward: VecDeque::new(),
            feedback: VecDeque::new(),
            last_forward: None,
            last_feedback: None,
            rng: rng::stream(seed, Stream::Channel(index)),
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn delay(&self) -> u64 {
        self.delay
    }

    /// Send a packet; returns whether it survived the erasure draw.
    pub fn push_forward(&mut self, t: Slot, packet: CodedPacket) -> Result<bool, SimError> {
        if self.last_forward == Some(t) {
            return Err(violation(format!(
                "second forward transmission on channel {} in slot {t}",
                self.index
            )));
        }
        self.last_forward = Some(t);
        let delivered = self.rng.random::<f64>() >= self.erasure_rate;
        let obs = Observation {
            created_at: t,
            packet: delivered.then_some(packet),
        };
        self.forward.push_back((t + self.delay, obs));
        Ok(delivered)
    }

    pub fn push_feedback(&mut self, t: Slot, bundle: FeedbackBundle) -> Result<(), SimError> {
        if self.last_feedback == Some(t) {
            return Err(violation(format!(
                "second feedback bundle on channel {} in slot {t}",
                self.index
            )));
        }
        self.last_feedback = Some(t);
        self.feedback.push_back((t + self.delay, bundle));
        Ok(())
    }

    /// Remove and return everything due at `t`.
    pub fn poll(&mut self, t: Slot) -> Polled {
        let forward = match self.forward.front() {
            Some((at, _)) if *at == t => self.forward.pop_front().map(|(_, o)| o),
            _ => None,
        };
        let feedback = match self.feedback.front() {
            Some((at, _)) if *at == t => self.feedback.pop_front().map(|(_, b)| b),
            _ => None,
        };
        Polled { forward, feedback }
    }

    pub fn in_flight(&self) -> usize {
        self.forward.len() + self.feedback.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{PacketKind, Span};

    fn pkt(t: Slot) -> CodedPacket {
        CodedPacket {
            origin: 0,
            created_at: t,
            span: Span::single(t),
            kind: PacketKind::New,
            coding: None,
        }
    }

    fn bundle(t: Slot) -> FeedbackBundle {
        FeedbackBundle {
            acked_packet_created_at: t,
            observed_at: t,
            ack: true,
            innovative: true,
            downstream: Vec::new(),
            sink_report: None,
        }
    }

    #[test]
    fn lossless_channel_delivers_after_one_way_delay() {
        let mut ch = ChannelInstance::new(0, 0.0, 20, 1);
        for t in 0..50 {
            assert!(ch.push_forward(t, pkt(t)).unwrap());
        }
        for t in 0..60 {
            let got = ch.poll(t).forward;
            if t >= 10 {
                assert_eq!(got.unwrap().packet.unwrap().created_at, t - 10);
            } else {
                assert!(got.is_none());
            }
        }
    }

    #[test]
    fn fully_erasing_channel_delivers_markers() {
        let mut ch = ChannelInstance::new(0, 1.0, 2, 1);
        for t in 0..100 {
            assert!(!ch.push_forward(t, pkt(t)).unwrap());
            if t >= 1 {
                let obs = ch.poll(t).forward.unwrap();
                assert!(obs.is_erased());
                assert_eq!(obs.created_at, t - 1);
            }
        }
    }

    #[test]
    fn feedback_arrives_after_half_rtt() {
        let mut ch = ChannelInstance::new(0, 0.5, 20, 1);
        ch.push_feedback(0, bundle(0)).unwrap();
        for t in 0..10 {
            assert!(ch.poll(t).feedback.is_none());
        }
        assert_eq!(ch.poll(10).feedback, Some(bundle(0)));
    }

    #[test]
    fn delay_is_exact() {
        let mut ch = ChannelInstance::new(0, 0.0, 20, 1);
        ch.push_forward(5, pkt(5)).unwrap();
        assert!(ch.poll(14).forward.is_none());
        assert!(ch.poll(15).forward.is_some());
        let empty = ch.poll(16);
        assert!(empty.forward.is_none() && empty.feedback.is_none());
    }

    #[test]
    fn feedback_is_lossless_and_fifo() {
        let mut ch = ChannelInstance::new(0, 0.9, 4, 3);
        for t in 0..5000 {
            ch.push_feedback(t, bundle(t)).unwrap();
        }
        let mut got = Vec::new();
        for t in 0..5010 {
            if let Some(b) = ch.poll(t).feedback {
                got.push(b.acked_packet_created_at);
            }
        }
        assert_eq!(got, (0..5000).collect::<Vec<_>>());
    }

    #[test]
    fn second_push_in_a_slot_is_rejected() {
        let mut ch = ChannelInstance::new(0, 0.0, 2, 1);
        ch.push_forward(3, pkt(3)).unwrap();
        assert!(matches!(
            ch.push_forward(3, pkt(3)),
            Err(SimError::Protocol(_))
        ));
        ch.push_feedback(3, bundle(3)).unwrap();
        assert!(ch.push_feedback(3, bundle(3)).is_err());
    }
}
