use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("design component x{index} = {value} lies outside [-1, 1]")]
    OutOfBounds { index: usize, value: f64 },

    #[error("{matrix}: Jacobi iteration did not converge (off-diagonal norm {residual:e})")]
    NoConvergence { matrix: String, residual: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e} below -1e-8 * trace ({trace:e})")]
    NotPositiveSemidefinite { eigenvalue: f64, trace: f64 },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("polytope is empty or has no interior: {0}")]
    EmptyPolytope(String),

    #[error("abscissa {abscissa} on the {side} side is outside the profile span [{lo}, {hi}]")]
    Extrapolation {
        side: &'static str,
        abscissa: f64,
        lo: f64,
        hi: f64,
    },

    #[error("profiles do not share abscissae: {0}")]
    AbscissaMismatch(String),

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed {what}: {detail}")]
    Format { what: String, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            what: what.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that originate in a numerical kernel rather than in
    /// bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::NotPositiveSemidefinite { .. }
                | Error::Infeasible
                | Error::Unbounded
                | Error::EmptyPolytope(_)
                | Error::DivisionByZero(_)
                | Error::Numerical(_)
        )
    }
}
