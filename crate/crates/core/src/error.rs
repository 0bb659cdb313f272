use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid welfare parameter: {0}")]
    InvalidWelfareParam(String),

    #[error("invalid utility vector: {0}")]
    InvalidUtilities(String),

    #[error("gradient undefined: {0}")]
    NonSmooth(String),

    #[error("invalid arrival distribution: {0}")]
    InvalidDistribution(String),

    #[error("corrupt arrival sequence: type index {index} at period {period} but only {types} types")]
    CorruptSequence {
        period: usize,
        index: usize,
        types: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver did not converge: {0}")]
    NotConverged(String),

    #[error("policy stepped past the horizon T = {horizon}")]
    HorizonExceeded { horizon: usize },

    #[error(
        "trajectory (seed {master_seed}, stream {stream}) failed at period {period}: {source}"
    )]
    Trajectory {
        master_seed: u64,
        stream: u64,
        period: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "negative regret on stream {stream} (seed {master_seed}): opt = {opt}, alg = {alg}, counts = {counts:?}"
    )]
    NegativeRegret {
        master_seed: u64,
        stream: u64,
        opt: f64,
        alg: f64,
        counts: Vec<u64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
