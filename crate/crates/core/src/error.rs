use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BtError {
    #[error("spec mismatch: {0}")]
    SpecMismatch(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("quotient index {m} exceeds precision {n}")]
    QuotientTooFine { m: u32, n: u32 },
    #[error("window exceeded: {0}")]
    WindowExceeded(String),
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("ball too small: need depth {need}, have {have}")]
    BallTooSmall { need: u32, have: u32 },
    #[error("enumeration cap {cap} exceeded")]
    CapExceeded { cap: usize },
    #[error("no certificate for edge {0}")]
    NoCertificate(String),
    #[error("nontrivial central character is not supported")]
    CentralCharacter,
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("depth {d} exceeds top level {k}")]
    DepthExceedsK { d: u32, k: u32 },
    #[error("degree bound {0} exceeded")]
    DegreeBoundExceeded(u32),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, BtError>;
