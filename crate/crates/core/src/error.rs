use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{detector} detector violates its placement condition (residual {residual:e})")]
    ConditionViolation { detector: &'static str, residual: f64 },

    #[error("photon labels remain entangled with the sources (second singular value {second_singular_value:e})")]
    Factorization { second_singular_value: f64 },

    #[error("initial state has no |22> population")]
    ZeroAmplitude,

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("quadrature truncation error {estimated:e} exceeds tolerance {tolerance:e}")]
    Quadrature { estimated: f64, tolerance: f64 },

    #[error("rejection envelope violated: density {density:e} > bound {bound:e}")]
    EnvelopeViolation { density: f64, bound: f64 },

    #[error("unknown {kind} strategy '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
