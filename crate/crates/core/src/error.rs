use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("spin count {0} out of range (1..=8)")]
    SpinCount(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid spin system: {0}")]
    InvalidSystem(String),
    #[error("{line}:{col}: {message}")]
    Parse { line: usize, col: usize, message: String },
    #[error("unknown transition {0}")]
    UnknownTransition(String),
    #[error("transition {0} is not single-quantum")]
    NotSingleQuantum(String),
    #[error("transition {0} is not observable")]
    Unobservable(String),
    #[error("unresolved symbolic delay {0}")]
    UnresolvedDelay(String),
    #[error("point count {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("spectral folding: dwell {dwell} s too coarse, need at most {required} s")]
    Folding { dwell: f64, required: f64 },
    #[error("protocol requires {0}")]
    Precondition(String),
    #[error("unsatisfiable connectivity: {0}")]
    Unsatisfiable(String),
}

pub type Result<T> = std::result::Result<T, SpinError>;
