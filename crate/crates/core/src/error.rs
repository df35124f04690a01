use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("point ({re}, {im}) is not admissible: {reason}")]
    NotAdmissible { re: f64, im: f64, reason: String },

    #[error("empty {0}")]
    Empty(String),

    #[error("collar condition violated at {point:?}: |d rho_eps - d phi| = {value}")]
    CollarViolation { point: [f64; 4], value: f64 },

    #[error("relaxation did not converge after {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("{failures} of {samples} walks exceeded the step cap")]
    WalkFailures { failures: u64, samples: u64 },

    #[error("Gram matrix is numerically singular (condition {condition:e}); use a smaller degree")]
    IllConditioned { condition: f64 },

    #[error("quadrature refinement changed the result by {change:e}")]
    Quadrature { change: f64 },

    #[error("partial sums diverge: {0}")]
    Divergent(String),

    #[error("sequence is not monotone: increase {increase:e} exceeds {allowed:e}")]
    NonMonotone { increase: f64, allowed: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn not_admissible(z: crate::C64, reason: impl Into<String>) -> Self {
        Error::NotAdmissible { re: z.re, im: z.im, reason: reason.into() }
    }

    /// True for failures of a numerical method on valid input, as opposed to
    /// rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::WalkFailures { .. }
                | Error::IllConditioned { .. }
                | Error::Quadrature { .. }
                | Error::Divergent(_)
                | Error::NonMonotone { .. }
        )
    }
}
