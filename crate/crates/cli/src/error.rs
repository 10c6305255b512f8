use osa_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot read `{path}`: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error("cannot write output: {0}")]
    Output(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// Process exit status: 2 configuration, 3 numerical, 4 rejection cap.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Read { .. } => 2,
            CliError::Output(_) => 1,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter { .. } | CoreError::MissingThreshold { .. } => 2,
                CoreError::RejectionCapExceeded { .. } => 4,
                CoreError::Quadrature { .. }
                | CoreError::ZeroDistance
                | CoreError::UndefinedSir
                | CoreError::MisalignedFadings { .. } => 3,
            },
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
