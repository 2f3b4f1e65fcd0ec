//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor argument violated its domain (nonpositive scale, bad grid, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A density failed the structural requirements of the operation
    /// (not symmetric around 0, not quasi-concave, nonzero noise center, ...).
    #[error("inadmissible density: {0}")]
    InadmissibleDensity(String),

    /// Adaptive integration exhausted its subdivision budget before the
    /// error estimate met the requested tolerance.
    #[error("quadrature failure: {context}: best value {value:.6e}, error estimate {error:.3e}")]
    QuadratureFailure {
        context: String,
        value: f64,
        error: f64,
    },

    /// The signal normalizer underflowed: `s` sits too deep in the joint tail
    /// for the posterior to be representable.
    #[error("degenerate signal: normalizer {z:.3e} underflowed at s = {s}")]
    DegenerateSignal { s: f64, z: f64 },

    /// An ordering precondition of a verification did not hold for the inputs.
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    /// A search (counterexample construction) ran out of candidates.
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
}

pub type Result<T> = std::result::Result<T, Error>;
