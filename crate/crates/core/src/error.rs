use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::Classification;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spin magnitude must be a non-negative half-integer, got {0}")]
    InvalidSpin(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("ambiguous conjugate pairing: eigenvalue {index} matches both {first} and {second}")]
    AmbiguousPairing { index: usize, first: usize, second: usize },

    #[error("complex eigenvalue {index} ({value}) has no conjugate partner")]
    UnmatchedEigenvalue { index: usize, value: Complex64 },

    #[error("operation requires spectrum class {expected}, found {found:?}")]
    WrongClassification { expected: &'static str, found: Classification },

    #[error(
        "Jordan chain residual {residual:.3e} exceeds tolerance {tolerance:.3e}; \
         refine the parameter to the exceptional point (see locate_exceptional_points)"
    )]
    JordanResidual { residual: f64, tolerance: f64 },

    #[error("symmetry operator is singular: eigenvalue {index} = {value:.3e} (metric would be degenerate)")]
    SingularMetric { index: usize, value: f64 },

    #[error("observable is not Hermitian (residual {0:.3e})")]
    NonHermitianObservable(f64),

    #[error("expectation value has imaginary part {imag:.3e} for real part {real:.3e}")]
    ImaginaryExpectation { real: f64, imag: f64 },

    #[error("spectral data does not reproduce the Hamiltonian (relative residual {0:.3e})")]
    DataMismatch(f64),

    #[error("mean spin vanishes (|<S>| = {0:.3e}); squeezing frame undefined")]
    VanishingMeanSpin(f64),

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }

    /// True for failures that come from the numerics rather than from the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::JordanResidual { .. }
                | Error::SingularMetric { .. }
                | Error::Numerical(_)
                | Error::DataMismatch(_)
                | Error::ImaginaryExpectation { .. }
                | Error::AmbiguousPairing { .. }
                | Error::UnmatchedEigenvalue { .. }
                | Error::VanishingMeanSpin(_)
                | Error::WrongClassification { .. }
        )
    }
}
