use thiserror::Error;

/// Errors raised by the instrument library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("invalid algebra spec: {0}")]
    InvalidSpec(String),

    #[error("algebra spec mismatch: expected {expected:?}, got {found:?}")]
    SpecMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("map is not completely positive: {0}")]
    NotCp(String),

    #[error("operator is not an isometry (defect {0:.3e})")]
    NotIsometry(f64),

    #[error("operator is not unitary (defect {0:.3e})")]
    NotUnitary(f64),

    #[error("POVM is not normalized (defect {0:.3e})")]
    NotNormalized(f64),

    #[error("instrument is not unital (defect {0:.3e})")]
    NotUnital(f64),

    #[error("instruments do not match: {0}")]
    Mismatch(String),

    #[error("C*-convex coefficients do not satisfy sum T*T = I (defect {0:.3e})")]
    CoefficientsNotNormalized(f64),

    #[error("instrument is not dominated: {0}")]
    NotDominated(String),

    #[error("invalid Radon-Nikodym derivative: {0}")]
    InvalidDerivative(String),

    #[error("basis does not span a unital algebra: {0}")]
    NotAnAlgebra(String),

    #[error("certificate check failed ({clause}): {detail}")]
    CheckFailed {
        clause: crate::certificates::Clause,
        detail: String,
    },

    #[error("theory violation: {0}")]
    TheoryViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
