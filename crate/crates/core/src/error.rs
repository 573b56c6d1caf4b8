use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid power function: {0}")]
    InvalidPower(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The time needed to drain the remaining weight is infinite; only a
    /// positive completion threshold makes the segment finite.
    #[error("non-terminating segment: {0}; use a positive completion_threshold")]
    NonTerminating(String),

    #[error(
        "enumeration cap exceeded: {maps} assignment maps > cap {cap}; use the round-robin or greedy-weight baselines"
    )]
    EnumerationCap { maps: u128, cap: u128 },

    #[error("machine sets differ: {0}")]
    MachineMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
