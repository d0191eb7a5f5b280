//! Shared vocabulary: slots, coding windows, packets and feedback.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::gf::Row;

/// Time slot index. One packet per channel per slot.
pub type Slot = u64;

/// Inclusive window `[lo, hi]` over the transmitting node's symbol stream.
///
/// At the source the symbols are information packets; at a relay they are
/// the innovative degrees of freedom it has stored, in arrival order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub lo: u64,
    pub hi: u64,
}

impl Span {
    pub fn new(lo: u64, hi: u64) -> Self {
        debug_assert!(lo <= hi, "empty span [{lo}, {hi}]");
        Span { lo, hi }
    }

    pub fn single(i: u64) -> Self {
        Span { lo: i, hi: i }
    }

    /// Never zero: a span always covers at least one symbol.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u64 {
        self.hi - self.lo + 1
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PacketKind {
    /// The window's upper edge advanced: carries one new symbol.
    New,
    /// A-priori FEC burst scheduled at an RTT boundary.
    FecAPriori,
    /// Feedback-triggered repair (also SR-ARQ retransmissions and fillers).
    FecPosterior,
    /// Repair forced by the end-of-window cap.
    FecEow,
}

impl PacketKind {
    pub fn is_fec(self) -> bool {
        !matches!(self, PacketKind::New)
    }
}

/// Field content of a packet, carried only in verification mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coding {
    /// Coefficients over information packets, with the coded payload.
    pub row: Row,
    /// Coefficients over the transmitter's own symbols `span.lo..=span.hi`.
    pub local: Vec<u8>,
}

/// One degree of freedom on the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct CodedPacket {
    pub origin: usize,
    pub created_at: Slot,
    pub span: Span,
    pub kind: PacketKind,
    /// Real coefficients and payload, present only in verification mode.
    pub coding: Option<Coding>,
}

/// An acknowledgement observed downstream and relayed upstream.
///
/// `channel` is the forward channel the bit describes (hop `channel` links
/// node `channel` to node `channel + 1`); `slot` is when the receiving end
/// of that channel observed the packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AckTriple {
    pub channel: usize,
    pub slot: Slot,
    pub ack: bool,
}

/// Destination state, carried back to the source for end-to-end schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SinkReport {
    pub observed_at: Slot,
    /// Highest information index decoded in order, if any.
    pub info_frontier: Option<u64>,
    /// Dimension of the destination's received space.
    pub dimension: u64,
}

/// Per-slot feedback from a receiver to its upstream neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackBundle {
    /// Transmission slot of the packet being acknowledged.
    pub acked_packet_created_at: Slot,
    /// Slot at which the receiver observed that packet (or its erasure).
    pub observed_at: Slot,
    pub ack: bool,
    /// The packet added a degree of freedom at the receiver.
    pub innovative: bool,
    /// Aggregated downstream acknowledgements, each forwarded once.
    pub downstream: Vec<AckTriple>,
    pub sink_report: Option<SinkReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    #[serde(rename = "bs")]
    BlankSpace,
    NetFec,
    MpMh,
    SrArq,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [
        Protocol::BlankSpace,
        Protocol::NetFec,
        Protocol::MpMh,
        Protocol::SrArq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::BlankSpace => "bs",
            Protocol::NetFec => "netfec",
            Protocol::MpMh => "mpmh",
            Protocol::SrArq => "srarq",
        }
    }

    pub fn is_coded(self) -> bool {
        !matches!(self, Protocol::SrArq)
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bs" | "blankspace" | "bs-ac-rlnc" => Ok(Protocol::BlankSpace),
            "netfec" | "net-fec" => Ok(Protocol::NetFec),
            "mpmh" | "mp-mh" | "baseline" => Ok(Protocol::MpMh),
            "srarq" | "sr-arq" => Ok(Protocol::SrArq),
            other => Err(format!("unknown protocol `{other}` (bs|netfec|mpmh|srarq)")),
        }
    }
}

/// Round half up, for FEC counts.
pub fn round_half_up(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else {
        (x + 0.5).floor() as u64
    }
}
