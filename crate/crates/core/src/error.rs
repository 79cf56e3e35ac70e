use thiserror::Error;

/// Errors raised by the evaluators and verification pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {arg} is a pole (distance to nearest pole {distance:e})")]
    Pole { arg: f64, distance: f64 },

    #[error("argument out of supported range: {0}")]
    Domain(String),

    #[error("coefficient data missing for prime {0}")]
    MissingPrime(u64),

    #[error("coefficient table too short: need n_max >= {required}, have {available}")]
    TableTooShort { required: usize, available: usize },

    #[error("theorem hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("integrand is not invariant under [[{a}, {b}], [{c}, {d}]]: deviation {deviation:e}")]
    NotInvariant {
        a: i64,
        b: i64,
        c: i64,
        d: i64,
        deviation: f64,
    },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("numerical inconsistency: {0}")]
    Inconsistent(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),
}

pub type Result<T> = std::result::Result<T, Error>;
