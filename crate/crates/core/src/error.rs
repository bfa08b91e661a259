use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("green function evaluated at coincident points")]
    SingularPoint,

    #[error("point ({x:.4e}, {y:.4e}) lies inside the resonator")]
    InsideResonator { x: f64, y: f64 },

    #[error("no pole found: {0}")]
    NoPole(String),

    #[error("{} poles found in search basin: {poles:?}", poles.len())]
    MultiplePoles { poles: Vec<Complex64> },

    #[error("normalization not converged: relative change {change:.3e} exceeds {tolerance:.1e}")]
    NormNotConverged { change: f64, tolerance: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("field container format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit status for a failed run.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::NoPole(_) | Error::MultiplePoles { .. } => 3,
            Error::NormNotConverged { .. } => 4,
            Error::LinearSolve(_) => 5,
            Error::Io(_) => 6,
            _ => 1,
        }
    }

    /// Short machine-readable kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::SingularPoint => "singular_point",
            Error::InsideResonator { .. } => "inside_resonator",
            Error::NoPole(_) => "no_pole",
            Error::MultiplePoles { .. } => "multiple_poles",
            Error::NormNotConverged { .. } => "norm_not_converged",
            Error::LinearSolve(_) => "linear_solve",
            Error::Config(_) => "config",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
