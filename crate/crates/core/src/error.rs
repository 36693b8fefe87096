use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid matching: {0}")]
    InvalidMatching(String),

    #[error("cannot construct topology: {0}")]
    Topology(String),

    #[error("demand matrix cannot be balanced: max row/column deviation {deviation:e} after {iterations} iterations")]
    Unsaturatable { iterations: usize, deviation: f64 },

    #[error("trace too short: {len} events, need at least {required}")]
    TraceTooShort { len: usize, required: usize },

    #[error("throughput solver did not converge after {iterations} iterations (primal {primal}, dual bound {dual})")]
    NoConvergence {
        iterations: usize,
        primal: f64,
        dual: f64,
    },

    #[error("evolving graph has no period; time-expanded throughput needs a periodic schedule")]
    Aperiodic,

    #[error("demand matrix has no positive entry")]
    EmptyDemand,

    #[error("malformed trace: {0}")]
    Trace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
