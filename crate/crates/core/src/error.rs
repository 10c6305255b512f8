use thiserror::Error;

/// Errors raised by parameter validation, numerical evaluation and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{protocol} requires `{name}` to be set")]
    MissingThreshold {
        protocol: &'static str,
        name: &'static str,
    },

    #[error("path loss is singular at zero distance")]
    ZeroDistance,

    #[error("SIR is undefined when both signal and interference are zero")]
    UndefinedSir,

    #[error("{sources} sources but {fadings} fading draws")]
    MisalignedFadings { sources: usize, fadings: usize },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {intervals} subintervals")]
    Quadrature {
        estimate: f64,
        error: f64,
        intervals: usize,
    },

    #[error("typical secondary transmitter never became active within {attempts} attempts")]
    RejectionCapExceeded { attempts: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
