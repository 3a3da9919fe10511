use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("chain must contain at least one bulk site")]
    EmptyChain,

    #[error("boundary angle {0} is not a total-reflection coin (must be exactly ±π/2)")]
    InvalidBoundary(f64),

    #[error("invalid disorder parameters: {0}")]
    InvalidDisorder(String),

    #[error("coin angle {theta} at site {site} is singular (|θ| = π/2 in the bulk)")]
    SingularCoin { site: usize, theta: f64 },

    #[error("operation requires boundaries {expected}, profile has {found}")]
    BoundaryMismatch { expected: String, found: String },

    #[error("dimension mismatch: expected {expected} amplitudes, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range (valid: {lo}..={hi})")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("requested quasi-energy #{k}, but only {available} lie in (0, π]")]
    QuasiEnergyOutOfRange { k: usize, available: usize },

    #[error("odd number of bulk sites ({0}); the unpaired transfer matrix path applies")]
    OddChain(usize),

    #[error("time step {t} outside protocol range 0..={total}")]
    TimeOutOfRange { t: usize, total: usize },

    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),

    #[error("fit window contains {points} points, need at least {required}")]
    DegenerateWindow { points: usize, required: usize },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
