use alloc::string::String;

/// Everything that can go wrong between a mode description and a simulated
/// infidelity.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("length mismatch for {field}: expected {expected}, found {found}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("time {t} outside [0, {tau}]")]
    OutOfRange { t: f64, tau: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{branch} branch unstable at beta = {beta}: Hessian eigenvalue {eigenvalue:e} <= 0")]
    Unstable {
        branch: &'static str,
        beta: f64,
        eigenvalue: f64,
    },

    #[error("over-constrained: increase L (constraint rank {rank} leaves no kernel in {len} basis functions)")]
    OverConstrained { rank: usize, len: usize },

    #[error("no angle-generating direction in kernel")]
    NoAngleDirection,

    #[error("internal PSD violation: {what} = {value:e}")]
    PsdViolation { what: &'static str, value: f64 },

    #[error("quadrature failed to reach tolerance {tol:e} within {panels} panels")]
    Quadrature { tol: f64, panels: usize },

    #[error("Hilbert space needs {required} bytes, budget is {budget}")]
    OverBudget { required: usize, budget: usize },

    #[error("trace drifted by {drift:e} at t = {t:e}")]
    TraceDrift { drift: f64, t: f64 },

    #[error("non-finite value encountered in {0}")]
    NotFinite(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical procedure, false for rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Unstable { .. }
                | Error::OverConstrained { .. }
                | Error::NoAngleDirection
                | Error::PsdViolation { .. }
                | Error::Quadrature { .. }
                | Error::TraceDrift { .. }
                | Error::NotFinite(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
