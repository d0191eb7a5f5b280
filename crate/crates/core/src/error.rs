use thiserror::Error;

/// A single violated configuration invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("node_count < 2")]
    TooFewNodes,
    #[error("expected {expected} erasure rates (one per hop), got {got}")]
    ErasureCount { expected: usize, got: usize },
    #[error("erasure rate {value} on hop {hop} is outside [0, 1]")]
    ErasureRange { hop: usize, value: f64 },
    #[error("expected {expected} per-hop RTTs, got {got}")]
    RttCount { expected: usize, got: usize },
    #[error("odd RTT {value} on hop {hop}")]
    OddRtt { hop: usize, value: u64 },
    #[error("zero RTT on hop {hop}")]
    ZeroRtt { hop: usize },
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("arrival rate {0} is outside [0, 1]")]
    ArrivalRange(f64),
    #[error("alpha {0} must be finite and non-negative")]
    Alpha(f64),
    #[error("threshold {0} must be finite")]
    Threshold(f64),
    #[error("max_window must be positive")]
    ZeroWindow,
    #[error("delivery_window {window} must be positive and below the horizon {horizon}")]
    DeliveryWindow { window: u64, horizon: u64 },
    #[error("payload_len must be positive")]
    ZeroPayload,
    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
    #[error("{0}")]
    Parse(String),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {}", join(.0))]
    Config(Vec<ConfigError>),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error(
        "malformed feedback at node {node}: downstream channel {channel} is not beyond this node"
    )]
    MalformedBundle { node: usize, channel: usize },
    #[error("degenerate run: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Codec(#[from] crate::gf::CodecError),
}

fn join(errs: &[ConfigError]) -> String {
    errs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub(crate) fn violation(msg: impl Into<String>) -> SimError {
    SimError::Protocol(msg.into())
}
