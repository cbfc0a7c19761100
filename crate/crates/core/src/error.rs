use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("profile error: {0}")]
    Profile(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("deformation too large for the projection (|A - I| = {0:.3e})")]
    DeformationTooLarge(f64),

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("Jacobian left the admissible band at t = {t:.6}: J = {j:.6}")]
    JacobianOutOfBand { t: f64, j: f64 },

    #[error("time step fell below the floor at t = {t:.6} (dt = {dt:.3e})")]
    TimeStepCollapse { t: f64, dt: f64 },

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("density evaluation clamped at {count} of {total} points")]
    ClampLimit { count: usize, total: usize },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DeformationTooLarge(_)
                | Error::NoConvergence { .. }
                | Error::JacobianOutOfBand { .. }
                | Error::TimeStepCollapse { .. }
                | Error::NonFinite(_)
                | Error::ClampLimit { .. }
        )
    }
}
