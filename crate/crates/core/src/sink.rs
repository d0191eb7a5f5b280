//! Destination: absorbs deliveries, tracks the in-order decoded prefix and
//! decode times, and answers every observation with feedback.

use std::ops::Range;

use crate::error::SimError;
use crate::receiver::{info_frontier, Receiver, Reception, SeqIntake};
use crate::types::{CodedPacket, FeedbackBundle, SinkReport, Slot};

#[derive(Debug, Clone)]
pub enum Intake {
    Coded(Receiver),
    Uncoded(SeqIntake),
}

#[derive(Debug, Clone)]
pub struct SinkState {
    intake: Intake,
    /// Information packets decoded in order (`0..decoded`).
    decoded: u64,
    decode_times: Vec<Slot>,
}

/// What one delivery changed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Absorbed {
    pub reception: Reception,
    /// Information indices decoded by this delivery.
    pub newly_decoded: Range<u64>,
}

impl SinkState {
    pub fn coded(verify: bool) -> Self {
        SinkState {
            intake: Intake::Coded(Receiver::new(verify)),
            decoded: 0,
            decode_times: Vec::new(),
        }
    }

    pub fn uncoded() -> Self {
        SinkState {
            intake: Intake::Uncoded(SeqIntake::new()),
            decoded: 0,
            decode_times: Vec::new(),
        }
    }

    /// Store a delivered packet at slot `t`. `relays` are the coded relay
    /// receivers in path order, used to map symbols back to information
    /// packets.
    pub fn absorb(
        &mut self,
        pkt: &CodedPacket,
        t: Slot,
        relays: &[&Receiver],
    ) -> Result<Absorbed, SimError> {
        let (reception, frontier) = match &mut self.intake {
            Intake::Coded(rx) => {
                let rec = rx.receive(pkt)?;
                (rec, info_frontier(rx.decoded(), relays))
            }
            Intake::Uncoded(rx) => {
                let fresh = rx.receive(pkt.span.lo);
                let rec = Reception {
                    innovative: fresh,
                    ..Default::default()
                };
                (rec, rx.frontier())
            }
        };
        let before = self.decoded;
        let now = frontier.map_or(0, |f| f + 1).max(before);
        self.decode_times
            .extend(std::iter::repeat_n(t, (now - before) as usize));
        self.decoded = now;
        Ok(Absorbed {
            reception,
            newly_decoded: before..now,
        })
    }

    pub fn decoded(&self) -> u64 {
        self.decoded
    }

    pub fn frontier(&self) -> Option<u64> {
        self.decoded.checked_sub(1)
    }

    pub fn decode_times(&self) -> &[Slot] {
        &self.decode_times
    }

    pub fn into_decode_times(self) -> Vec<Slot> {
        self.decode_times
    }

    pub fn receiver(&self) -> Option<&Receiver> {
        match &self.intake {
            Intake::Coded(rx) => Some(rx),
            Intake::Uncoded(_) => None,
        }
    }

    /// Rank of the received space (received packets for uncoded traffic).
    pub fn dimension(&self) -> u64 {
        match &self.intake {
            Intake::Coded(rx) => rx.rank(),
            Intake::Uncoded(rx) => rx.count(),
        }
    }

    /// ACK on delivery, NACK on erasure; the destination has nothing
    /// downstream to aggregate, only its own state report.
    pub fn emit_feedback(
        &self,
        delivered: bool,
        innovative: bool,
        created_at: Slot,
        t: Slot,
    ) -> FeedbackBundle {
        FeedbackBundle {
            acked_packet_created_at: created_at,
            observed_at: t,
            ack: delivered,
            innovative,
            downstream: Vec::new(),
            sink_report: Some(SinkReport {
                observed_at: t,
                info_frontier: self.frontier(),
                dimension: self.dimension(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::{encode, Row};
    use crate::types::{Coding, PacketKind, Span};

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
    fn singleton_is_decoded() {
        let mut s = SinkState::coded(false);
        let a = s.absorb(&pkt(0, 0), 7, &[]).unwrap();
        assert_eq!(a.newly_decoded, 0..1);
        assert_eq!(s.decode_times(), &[7]);
    }

    #[test]
    fn one_row_over_two_symbols_decodes_nothing() {
        let mut s = SinkState::coded(false);
        let a = s.absorb(&pkt(0, 1), 3, &[]).unwrap();
        assert!(a.reception.innovative);
        assert!(a.newly_decoded.is_empty());
        assert_eq!(s.frontier(), None);
    }

    #[test]
    fn two_independent_rows_decode_both() {
        let p = [vec![1u8, 2, 3], vec![7u8, 8, 9]];
        let row = |a: u8, b: u8| Coding {
            row: Row::new(0, vec![a, b], encode(&[&p[0], &p[1]], &[a, b]).unwrap()),
            local: vec![a, b],
        };
        let mut s = SinkState::coded(true);
        let mut k = pkt(0, 1);
        k.coding = Some(row(3, 5));
        s.absorb(&k, 1, &[]).unwrap();
        k.coding = Some(row(1, 9));
        let a = s.absorb(&k, 2, &[]).unwrap();
        assert_eq!(a.newly_decoded, 0..2);
        let dec = s.receiver().unwrap().decoder().unwrap();
        assert_eq!(dec.payload(1).unwrap(), &p[1][..]);
    }

    #[test]
    fn feedback_mirrors_observation() {
        let s = SinkState::coded(false);
        let ack = s.emit_feedback(true, true, 4, 9);
        assert!(ack.ack && ack.downstream.is_empty());
        assert_eq!(ack.sink_report.unwrap().observed_at, 9);
        assert!(!s.emit_feedback(false, false, 4, 9).ack);
    }

    #[test]
    fn uncoded_sink_reassembles() {
        let mut s = SinkState::uncoded();
        s.absorb(&pkt(1, 1), 5, &[]).unwrap();
        assert_eq!(s.decoded(), 0);
        let a = s.absorb(&pkt(0, 0), 6, &[]).unwrap();
        assert_eq!(a.newly_decoded, 0..2);
        assert_eq!(s.decode_times(), &[6, 6]);
    }
}
