use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("experiment '{experiment}' row {row} sums to {sum}, expected 1")]
    NonStochasticRow {
        experiment: String,
        row: usize,
        sum: f64,
    },

    #[error("bad prior: {0}")]
    BadPrior(String),

    #[error("operation requires exactly 2 states, got {0}")]
    NotBinaryState(usize),

    #[error("empty experiment list")]
    EmptyInput,

    #[error("product signal space has {cells} cells, exceeding the cap of {cap}")]
    InstanceTooLarge { cells: usize, cap: usize },

    #[error("source 1 must have a strictly larger Chernoff index than every other source")]
    NoStrictLeader,

    #[error("power experiment would have {signals} signals, exceeding the cap of {cap}")]
    TOverflow { signals: usize, cap: usize },

    #[error("target payoff vector lies outside the problem's payoff polyhedron")]
    TargetOutsidePolyhedron,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
