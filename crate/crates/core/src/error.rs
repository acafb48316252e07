use thiserror::Error;

/// Errors produced by the geometry toolkit.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point off the hyperboloid: <x,x> = {0}")]
    OffHyperboloid(f64),

    #[error("matrix is not a Lorentz isometry (residual {0:e})")]
    NotIsometry(f64),

    #[error("point {0:?} lies outside the domain")]
    OutsideDomain([f64; 2]),

    #[error("ill-conditioned query: {0}")]
    IllConditioned(String),

    #[error("cutoff certification failed at x = {x}: {reason}")]
    Certification { x: f64, reason: String },

    #[error("profile not admissible at rho = {rho}: {reason}")]
    Inadmissible { rho: f64, reason: String },

    #[error("gauss map fold between samples {0} and {1}")]
    GaussMapFold(usize, usize),

    #[error("surface not convex enough: principal curvature {0} <= -1")]
    NotConvex(f64),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the failure is attributable to the input (exit code 2) rather than to a violated invariant (exit code 1).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Certification { .. } | Error::GaussMapFold(..) | Error::NotConvex(_))
    }
}
