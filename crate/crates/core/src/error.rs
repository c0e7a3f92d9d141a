use thiserror::Error;

use crate::inverse::Side;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("malformed rational `{0}`")]
    BadRational(String),
    #[error("prime contexts differ: {0} vs {1}")]
    ContextMismatch(u64, u64),
    #[error("ambient spaces differ: {0} vs {1}")]
    AmbientMismatch(String, String),
    #[error("index {index} is outside K^{dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("operation requires a nonzero vector")]
    ZeroVector,
    #[error("affine coefficient beta must be nonzero")]
    ZeroBeta,
    #[error("epsilon must be a positive rational, got {0}")]
    NonPositiveEpsilon(String),
    #[error("operator is not finite dimensional")]
    NotFiniteDimensional,
    #[error("matrix is singular")]
    Singular,
    #[error("matrix shapes do not match: {0}")]
    Shape(String),
    #[error("unsupported operator family: {0}")]
    UnsupportedFamily(String),
    #[error("operator is not {0} invertible")]
    NotInvertibleOnSide(Side),
    #[error("vector has no finitely supported representation: {0}")]
    InfiniteSupport(String),
    #[error("geometric tails with different ratios cannot be combined")]
    RatioMismatch,
    #[error("contraction factor {0} is not below 1")]
    ContractionFailure(String),
    #[error("lambda is not in the left pseudospectrum")]
    NotInPseudospectrum,
    #[error("lambda is not in the left condition pseudospectrum")]
    NotInConditionPseudospectrum,
    #[error("lambda lies in the left spectrum; use the kernel certificate")]
    InSpectrum,
    #[error("operator is a scalar multiple of the identity")]
    ScalarOperator,
    #[error("unknown law `{0}`")]
    UnknownLaw(String),
    #[error("invalid document: {0}")]
    Schema(String),
}

impl Error {
    /// Errors caused by a malformed input document rather than by the
    /// mathematical contract of an operation.
    pub fn is_schema(&self) -> bool {
        matches!(
            self,
            Error::NotPrime(_)
                | Error::BadRational(_)
                | Error::ContextMismatch(..)
                | Error::AmbientMismatch(..)
                | Error::IndexOutOfRange { .. }
                | Error::ZeroBeta
                | Error::NonPositiveEpsilon(_)
                | Error::Shape(_)
                | Error::UnknownLaw(_)
                | Error::Schema(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
