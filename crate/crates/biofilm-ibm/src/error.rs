//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("config: missing key {0}")]
    MissingKey(String),
    #[error("config: unknown key {0}")]
    UnknownKey(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("csv row {row}: {msg}")]
    CsvRow { row: usize, msg: String },
    #[error("degenerate spring between nodes {0} and {1} (zero length)")]
    DegenerateSpring(usize, usize),
    #[error("node {node} left the domain at {pos:?} (step {step})")]
    NodeLeftDomain {
        node: usize,
        pos: [f64; 3],
        step: usize,
    },
    #[error("field: {0}")]
    Field(String),
    #[error(
        "solver stagnated at relative residual {residual:.3e} (tolerance {tol:.1e}, {cycles} cycles)"
    )]
    Stagnation {
        residual: f64,
        tol: f64,
        cycles: usize,
        /// True when the stall sits at the round-off floor rather than a
        /// genuine convergence failure.
        at_floor: bool,
    },
    #[error("solver did not reach tolerance {tol:.1e} in {cycles} cycles (residual {residual:.3e})")]
    NoConvergence {
        residual: f64,
        tol: f64,
        cycles: usize,
    },
    #[error("run flagged unstable: kinetic energy {ke:.3e} exceeds {limit:.3e} at step {step}")]
    Unstable { ke: f64, limit: f64, step: usize },
    #[error("validation: {0}")]
    Validation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
