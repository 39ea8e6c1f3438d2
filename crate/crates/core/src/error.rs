use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("Arnoldi did not converge after {restarts} restarts (best residuals {best_residuals:?})")]
    NotConverged {
        restarts: usize,
        best_residuals: Vec<f64>,
    },

    #[error("argument |z| = {modulus} outside validated Bessel series range (|z| <= {limit})")]
    OutOfRange { modulus: f64, limit: f64 },

    #[error("system size {size} exceeds dense reference limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("eigensolver: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular(_) | Error::NotConverged { .. } | Error::Eigen(_) | Error::DegenerateTriangle { .. }
        )
    }
}
