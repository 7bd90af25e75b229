use thiserror::Error;

/// Errors raised across the library. The variant name is the stable
/// identifier reported by the command-line front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("imaginary part is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error("integer system has no solution")]
    NoSolution,
    #[error("lattice enumeration exceeded the capacity limit of {0} points")]
    CapacityExceeded(usize),
    #[error("invalid polarization matrix: {0}")]
    InvalidPolarization(String),
    #[error("embedding compatibility violated: {0}")]
    CompatibilityViolation(String),
    #[error("random draw produced a degenerate instance after {0} attempts")]
    DegenerateSeed(usize),
    #[error("coset representative {0:?} is outside the Prym index set")]
    NotInIndexSet(Vec<i64>),
    #[error("flow direction violates the Prym block shape: {0}")]
    PrymShapeViolation(String),
    #[error("theta value {value:.3e} is too close to a zero (scale {scale:.3e})")]
    NearThetaZero { value: f64, scale: f64 },
    #[error("denominator of theta ratio is too close to zero ({0:.3e})")]
    DenominatorNearZero(f64),
    #[error("spectral parameter mu must be nonzero")]
    MuZero,
    #[error("trajectory left the positive chart at t = {0}")]
    PositivityLost(f64),
    #[error("characteristic polynomial fit residual {0:.3e} too large")]
    FitResidualTooLarge(f64),
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable short name of the variant.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotSymmetric(_) => "NotSymmetric",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NonFinite => "NonFinite",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::Overflow(_) => "Overflow",
            Error::NoSolution => "NoSolution",
            Error::CapacityExceeded(_) => "CapacityExceeded",
            Error::InvalidPolarization(_) => "InvalidPolarization",
            Error::CompatibilityViolation(_) => "CompatibilityViolation",
            Error::DegenerateSeed(_) => "DegenerateSeed",
            Error::NotInIndexSet(_) => "NotInIndexSet",
            Error::PrymShapeViolation(_) => "PrymShapeViolation",
            Error::NearThetaZero { .. } => "NearThetaZero",
            Error::DenominatorNearZero(_) => "DenominatorNearZero",
            Error::MuZero => "MuZero",
            Error::PositivityLost(_) => "PositivityLost",
            Error::FitResidualTooLarge(_) => "FitResidualTooLarge",
            Error::StepSizeUnderflow(_) => "StepSizeUnderflow",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
