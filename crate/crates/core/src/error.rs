//! Crate-wide error type and failure classification.

use thiserror::Error;

/// Broad failure class, used by the command-line front end to choose an exit
/// code: configuration/input problems exit with 2, numerical/model failures
/// with 3, filesystem problems with 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:.3e} exceeds {bound:.3e}")]
    NotHermitian { deviation: f64, bound: f64 },

    #[error("eigensolver did not converge")]
    EigenFailure,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "charge bath too dense: draw needs {requested} distinct sites but only {available} \
         lattice sites lie inside the geometry"
    )]
    BathTooDense { requested: usize, available: usize },

    #[error("no dip exceeds the noise threshold")]
    NoDip,

    #[error("frequency grids do not overlap")]
    GridMismatch,

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("table error: {0}")]
    Table(String),

    #[error("optics error: {0}")]
    Optics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_)
            | Error::BathTooDense { .. }
            | Error::GridMismatch
            | Error::Config(_)
            | Error::Table(_) => ErrorClass::Input,
            Error::NotHermitian { .. }
            | Error::EigenFailure
            | Error::NoDip
            | Error::FitRejected(_)
            | Error::Optics(_) => ErrorClass::Numerical,
            Error::Io(_) => ErrorClass::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
