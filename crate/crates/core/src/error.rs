use thiserror::Error;

/// Contract violations of the signal-processing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("series are not sampled on the same grid")]
    GridMismatch,
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
}

/// Invalid model or scenario parameters.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{name} must be {requirement}, got {value}")]
    OutOfRange {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("no equilibrium: Pm * x / (E * V) = {0} exceeds 1")]
    NoEquilibrium(f64),
    #[error("fault time {0} s is not aligned to the simulation grid")]
    Misaligned(f64),
    #[error(transparent)]
    Signal(#[from] SignalError),
}
