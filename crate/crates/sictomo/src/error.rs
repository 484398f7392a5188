//! Error type shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("unsupported matrix dimension {0} (expected 2, 4 or 8)")]
    UnsupportedDim(usize),
    #[error("tensor product dimension {0} exceeds 8")]
    DimensionOverflow(usize),
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("not a valid density operator: {0}")]
    NotDensity(String),
    #[error("degenerate spectrum: eigenvalue gap {0:.3e} below 1e-12")]
    DegenerateSpectrum(f64),
    #[error("POVM element {index} invalid: {reason}")]
    InvalidPovmElement { index: usize, reason: String },
    #[error("POVM incomplete: max deviation of sum from identity is {0:.3e}")]
    IncompletePovm(f64),
    #[error("Kraus set incomplete: max deviation of sum M^dag M from identity is {0:.3e}")]
    IncompleteKraus(f64),
    #[error("measurement matrix is singular (|det| = {0:.3e}); POVM is not informationally complete")]
    SingularMeasurement(f64),
    #[error("Fisher matrix singular or ill-conditioned (condition estimate {0:.3e})")]
    SingularFisher(f64),
    #[error("outcome probability p[{nu}] = {p:.3e} at or below floor {floor:.3e}")]
    ProbabilityFloor { nu: usize, p: f64, floor: f64 },
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("state angles out of range: {0}")]
    AngleRange(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad user input).
    /// The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotUnitary(_)
                | Error::NotHermitian(_)
                | Error::NotDensity(_)
                | Error::DegenerateSpectrum(_)
                | Error::InvalidPovmElement { .. }
                | Error::IncompletePovm(_)
                | Error::IncompleteKraus(_)
                | Error::SingularMeasurement(_)
                | Error::SingularFisher(_)
                | Error::ProbabilityFloor { .. }
        )
    }
}
