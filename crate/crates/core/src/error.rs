use thiserror::Error;

/// Errors raised by the library. Every module shares this enum so the CLI
/// can map failures onto exit codes in one place.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix is rank deficient (pivot norm {pivot:.3e} below {threshold:.3e})")]
    RankDeficient { pivot: f64, threshold: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("zero vector")]
    ZeroVector,

    #[error("enumeration of {count} subsets exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: u128 },

    #[error("basis is not orthonormal (max deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error("bound is inapplicable: {0}")]
    Inapplicable(String),

    #[error("closed-form KL {closed} disagrees with series {series}")]
    FormulaMismatch { closed: f64, series: f64 },

    #[error("shift {value} is not an integer multiple of the noise amplitude")]
    NotIntegerShift { value: f64 },

    #[error("unknown construction tag `{0}`")]
    UnknownTag(String),

    #[error("construction screen failed after {attempts} attempts")]
    ScreenFailed { attempts: usize },

    #[error("matrix file format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
