use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("empty partition")]
    EmptyPartition,
    #[error("nonpositive mass")]
    NonPositiveMass,
    #[error("invalid merge indices: {0}")]
    InvalidIndices(String),
    #[error("no {k}-th coagulation for N = {n}")]
    NoKthCoagulation { k: u64, n: u64 },
    #[error("hypoexponential requires distinct rates")]
    DistinctRates,
    #[error("F(m,N) empty for even m")]
    EvenForestComponents,
    #[error("no internal vertex")]
    NoInternalVertex,
    #[error("absorbed")]
    Absorbed,
    #[error("inconsistent state: {0}")]
    InconsistentState(String),
    #[error("enumeration bound exceeded: {0}")]
    EnumerationBound(String),
    #[error("degenerate test")]
    DegenerateTest,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
