use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("germ has a constant term; f(0) must be 0")]
    ConstantTerm,

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("degenerate critical point at {location:?} (hessian eigenvalues {eigenvalues:?})")]
    DegenerateCritical {
        location: Vec<f64>,
        eigenvalues: Vec<f64>,
    },

    #[error("singularity is not isolated: critical point at {location:?} inside the ball")]
    NotIsolated { location: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge after {terms} terms at z = {z}")]
    NoConvergence { terms: usize, z: f64 },

    #[error("pole at t = {t}")]
    Pole { t: f64 },

    #[error("grid point {t} lies within {distance} of the pole at {eta}")]
    PoleProximity { t: f64, eta: f64, distance: f64 },

    #[error("message is not in the catalog")]
    UnknownMessage,

    #[error("decryption error: {0}")]
    Decryption(String),

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("invalid catalog: {0}")]
    InvalidCatalog(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::ConstantTerm
            | Error::InvalidWeights(_)
            | Error::InvalidCatalog(_)
            | Error::InvalidArgument(_)
            | Error::DimensionMismatch { .. }
            | Error::Io(_) => 2,
            Error::DegenerateCritical { .. } | Error::NotIsolated { .. } => 3,
            Error::Decryption(_) | Error::UnknownMessage | Error::ProtocolViolation(_) => 4,
            Error::Domain(_)
            | Error::NoConvergence { .. }
            | Error::Pole { .. }
            | Error::PoleProximity { .. } => 5,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
