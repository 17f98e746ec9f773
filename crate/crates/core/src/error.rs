use thiserror::Error;

/// Errors raised by the exact probability layer and the protocols.
///
/// Exact quantities are carried as rendered rationals so the error type stays
/// independent of the scalar backend.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("{labels} labels given for {masses} masses")]
    LabelMismatch { labels: usize, masses: usize },
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
    #[error("negative mass {mass} at symbol {symbol}")]
    NegativeMass { symbol: usize, mass: String },
    #[error("masses sum to {sum}, not 1 (deficit {deficit})")]
    NotNormalized { sum: String, deficit: String },
    #[error("value {0} lies outside (0, 1]")]
    OutsideUnitInterval(String),
    #[error("total mass is zero")]
    ZeroMass,
    #[error("symbol {0} is outside the alphabet")]
    UnknownSymbol(String),
    #[error("symbol {0} has zero probability")]
    ZeroProbability(usize),
    #[error("half split reached prefix sum {sum} instead of 1/2")]
    HalfSplitInvariant { sum: String },
    #[error("distribution is not dyadic: symbol {symbol} has mass {mass}")]
    NotDyadic { symbol: usize, mass: String },
    #[error("symbol order does not list the support by nonincreasing mass")]
    BadSymbolOrder,
    #[error("codeword {0:?} appears twice")]
    DuplicateCodeword(String),
    #[error("codebook is not prefix-free: {prefix:?} is a prefix of {word:?}")]
    NotPrefixFree { prefix: String, word: String },
    #[error("codebook is not full: Kraft sum {sum}, deficit {deficit}")]
    NotFull { sum: String, deficit: String },
    #[error("ill-formed key law: {0}")]
    IllFormedLaw(String),
    #[error("law has tail mass {0} but tail was not accepted")]
    TailNotAccepted(String),
    #[error("law is not a randomly-stopped bit sequence: {0}")]
    NotRandomlyStopped(String),
    #[error("key longer than the depth limit {0}")]
    DepthExceeded(usize),
    #[error("stopping rule undefined on reachable prefix {0:?}")]
    MissingContinuation(String),
    #[error("symbol {symbol} is not emitted in round {w}")]
    Unreachable { symbol: usize, w: u32 },
    #[error("P(X=Y) = 0, the agreement-conditional law is undefined")]
    NoAgreement,
    #[error("bit source exhausted")]
    BitsExhausted,
    #[error("round limit {0} exceeded")]
    RoundLimit(u32),
    #[error("invalid hash function: {0}")]
    InvalidHash(String),
    #[error("no candidate hash meets the bound {bound}; best collision error {best}")]
    NoHashMeetsBound { best: String, bound: String },
    #[error("reconciler contract violated: {0}")]
    ReconcilerContract(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
