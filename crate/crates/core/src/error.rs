use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the synthesis toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LqssError {
    /// A dimensional or structural precondition is violated (odd size,
    /// non-doubled-up input, non-unitary scattering matrix, ...).
    #[error("structural error: {0}")]
    Structural(String),

    /// The input is well-formed but outside the supported class
    /// (Jordan blocks larger than two, unsupported degeneracy).
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),

    /// The coupling matrix is J-degenerate and the degenerate subspace
    /// cannot be put in canonical form.
    #[error("degenerate coupling: {0}")]
    Degeneracy(String),

    /// A numerical step failed (ill-conditioned inversion, no convergence).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The resolvent `sI - A` is singular at the requested frequency.
    #[error("pole at s = {s}")]
    Pole { s: Complex64 },

    /// A Cayley transform hit an eigenvalue at which it is undefined.
    #[error("unit eigenvalue {eigenvalue} blocks the Cayley transform")]
    UnitEigenvalue { eigenvalue: Complex64 },

    /// A synthesis parameter is out of range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Malformed input file; `at` locates the offending entry.
    #[error("invalid input at {at}: {message}")]
    Format { at: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, LqssError>;

impl LqssError {
    /// Stable short identifier used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            LqssError::Structural(_) => "structural",
            LqssError::UnsupportedStructure(_) => "unsupported_structure",
            LqssError::Degeneracy(_) => "degeneracy",
            LqssError::Numerical(_) => "numerical",
            LqssError::Pole { .. } => "pole",
            LqssError::UnitEigenvalue { .. } => "unit_eigenvalue",
            LqssError::Parameter(_) => "parameter",
            LqssError::Format { .. } => "format",
            LqssError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for LqssError {
    fn from(e: std::io::Error) -> Self {
        LqssError::Io(e.to_string())
    }
}
