use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside its documented range.
    Parameter(String),
    /// The mesh violates an admissibility requirement.
    MeshValidity(String),
    /// Input data (coefficient, forcing) violates its declared bounds.
    Data(String),
    /// An integrand stayed non-finite after the single permitted resample.
    Singular { triangle: usize, local_vertex: Option<usize> },
    /// A matrix that should be positive semidefinite produced a negative quadratic form.
    MatrixValidity(String),
    /// An iterative solve stopped at its iteration cap.
    NoConvergence { iterations: usize, relative_residual: f64 },
    /// Internal invariant broken (e.g. rejection loop exceeded its iteration cap).
    Internal(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::MeshValidity(msg) => write!(f, "invalid mesh: {msg}"),
            Error::Data(msg) => write!(f, "invalid data: {msg}"),
            Error::Singular {
                triangle,
                local_vertex: Some(v),
            } => write!(
                f,
                "integrand non-finite at resampled point (triangle {triangle}, local vertex {v})"
            ),
            Error::Singular {
                triangle,
                local_vertex: None,
            } => write!(f, "integrand non-finite at resampled point (triangle {triangle})"),
            Error::MatrixValidity(msg) => write!(f, "invalid matrix: {msg}"),
            Error::NoConvergence {
                iterations,
                relative_residual,
            } => write!(
                f,
                "solver did not converge after {iterations} iterations (relative residual {relative_residual:e})"
            ),
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
