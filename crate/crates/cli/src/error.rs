use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] spreadlab::Error),
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialisation error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use spreadlab::Error as E;
        match self {
            CliError::Core(E::NoConvergence { .. } | E::FormulaMismatch { .. } | E::Singular(_) | E::ScreenFailed { .. }) => EXIT_NUMERIC,
            _ => EXIT_INVALID,
        }
    }
}
