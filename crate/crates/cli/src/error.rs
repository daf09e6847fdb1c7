use gaa_core::GaaError;
use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const INFEASIBLE: i32 = 2;
    pub const INVALID: i32 = 3;
    pub const BOUND_VIOLATED: i32 = 4;
    pub const NOT_MIXABLE: i32 = 5;
    pub const OUT_OF_RANGE: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("eta search left the range ({lo}, {hi})")]
    OutOfRange { lo: f64, hi: f64 },
    #[error(transparent)]
    Core(#[from] GaaError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Invalid(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => exit::INVALID,
            CliError::OutOfRange { .. } => exit::OUT_OF_RANGE,
            CliError::Core(
                GaaError::InvalidInput(_)
                | GaaError::InvalidConfig(_)
                | GaaError::InvalidPrior(_)
                | GaaError::BoundaryGradient { .. }
                | GaaError::UnboundedPenalty { .. },
            ) => exit::INVALID,
            CliError::Core(GaaError::OutOfRange { .. }) => exit::OUT_OF_RANGE,
            _ => exit::FAILURE,
        }
    }
}
