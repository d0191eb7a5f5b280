//! Independent deterministic random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream keyed by the run
//! seed and a fixed stream id, so changing how much one consumer draws never
//! shifts another consumer's sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Erasure draws of forward channel `n`.
    Channel(usize),
    /// Bernoulli packet arrivals at the source.
    Arrivals,
    /// Source payload bytes (verification mode).
    Payloads,
    /// Coding coefficients drawn by node `n` (verification mode).
    Coefficients(usize),
    /// Generic coefficient redraws for the verification cross-check.
    Redraw,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Channel(n) => 0x1_0000 + n as u64,
            Stream::Arrivals => 0x2_0000,
            Stream::Payloads => 0x3_0000,
            Stream::Coefficients(n) => 0x4_0000 + n as u64,
            Stream::Redraw => 0x5_0000,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
