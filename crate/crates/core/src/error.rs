use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("G is not symmetric (max |G - G^T| = {0:e})")]
    NonSymmetricG(f64),
    #[error("F is not Hermitian (max |F - F^dag| = {0:e})")]
    NonHermitianF(f64),
    #[error("Fock-form Hamiltonian does not map to a real quadrature matrix (max |Im G| = {0:e})")]
    InvalidFockForm(f64),
    #[error("invalid measurement setting: {0}")]
    MeasurementSettingInvalid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("matrix exponential produced non-finite entries")]
    MatrixExpFailure,
    #[error("singular block: {0}")]
    SingularBlock(String),
    #[error("principal logarithm undefined: {0}")]
    LogBranchFailure(String),
    #[error("forward filter diverged: {0}")]
    FilterDivergence(String),
    #[error("Riccati integration blew up: {0}")]
    RiccatiBlowup(String),
    #[error("Fock truncation overflow: tail mass {tail:e} exceeds tolerance {tol:e}")]
    TruncationOverflow { tail: f64, tol: f64 },
    #[error("evolved state is not Hermitian (residual {0:e})")]
    NonHermitianResult(f64),
    #[error("state has zero trace")]
    ZeroTrace,
    #[error("no measurement information in the effect but d is nonzero")]
    SingularInformationMatrix,
    #[error("cross-check failed: {0}")]
    CrossCheckFailure(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonSymmetricG(_) => "NonSymmetricG",
            Error::NonHermitianF(_) => "NonHermitianF",
            Error::InvalidFockForm(_) => "InvalidFockForm",
            Error::MeasurementSettingInvalid(_) => "MeasurementSettingInvalid",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::ParameterOutOfRange(_) => "ParameterOutOfRange",
            Error::MatrixExpFailure => "MatrixExpFailure",
            Error::SingularBlock(_) => "SingularBlock",
            Error::LogBranchFailure(_) => "LogBranchFailure",
            Error::FilterDivergence(_) => "FilterDivergence",
            Error::RiccatiBlowup(_) => "RiccatiBlowup",
            Error::TruncationOverflow { .. } => "TruncationOverflow",
            Error::NonHermitianResult(_) => "NonHermitianResult",
            Error::ZeroTrace => "ZeroTrace",
            Error::SingularInformationMatrix => "SingularInformationMatrix",
            Error::CrossCheckFailure(_) => "CrossCheckFailure",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
