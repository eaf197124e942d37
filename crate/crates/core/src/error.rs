use thiserror::Error;

/// Errors raised by the simulation and fitting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A unit conversion or run was requested without the constants it needs.
    #[error("configuration error: {0}")]
    Config(String),

    /// Conditioning on an outcome that has zero probability.
    #[error("conditioning on a zero-probability outcome: {0}")]
    Conditioning(String),

    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge on [{lower}, {upper}]: estimate {estimate:e}, error {error:e} after {intervals} intervals")]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    /// The Fock-space oracle was run with a truncation that cannot hold the state.
    #[error("fock oracle truncation too small: {0}")]
    Truncation(String),

    /// A phase-space grid is too coarse or too narrow for the requested transform.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A minimum search landed on the boundary of its grid.
    #[error("coverage error: {0}")]
    Coverage(String),

    /// Rejection sampling accepted too few events.
    #[error("sampler starved: {accepted} accepted out of {attempts} attempts")]
    Starvation { accepted: usize, attempts: u64 },

    /// Operation on an empty collection.
    #[error("empty input: {0}")]
    Empty(String),

    /// Nonlinear least squares gave up.
    #[error("fit did not converge: {0}")]
    Convergence(String),

    /// Malformed trace, grid or ensemble file.
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {value}")))
    }
}
