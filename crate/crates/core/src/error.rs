use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical kernels and the diagnostics built on them.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("norm tags differ: {0:?} vs {1:?}")]
    NormMismatch(crate::linalg::NormTag, crate::linalg::NormTag),
    #[error("kind mismatch: {0}")]
    KindMismatch(String),
    #[error("dimension {0} outside the supported range 1..=32")]
    Dimension(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("map is not contracting: observed ratio {observed} exceeds bound {bound}")]
    NonContracting { observed: f64, bound: f64 },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("operator is not invertible")]
    NotInvertible,
    #[error("eigenvalue {0} lies within the circle gap")]
    CircleEigenvalue(Complex64),
    #[error("eigenbasis is too ill-conditioned to build spectral projections (cond ~ {0:e})")]
    IllConditioned(f64),
    #[error("invalid splitting: {0}")]
    InvalidSplitting(String),
    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),
    #[error("splitting carries no hyperbolic or generalized hyperbolic certificate")]
    NotCertified,
    #[error("factor must exceed 1, got {0}")]
    BadFactor(f64),
    #[error("cannot separate targets within a step budget of {budget}")]
    CannotSeparate { budget: usize },
    #[error("contraction factor {factor} is not below 1")]
    NotContraction { factor: f64 },
    #[error("series needs more than {0} terms")]
    TrajectoryBudget(usize),
    #[error("spectral radius {0} is not below 1")]
    NotContractiveSpectrum(f64),
    #[error("vector is not homoclinic over the requested horizon")]
    NotHomoclinic,
    #[error("i/o: {0}")]
    Io(String),
    #[error("not a chain: defect {defect} exceeds {bound} at step {index}")]
    NotAChain { index: usize, defect: f64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable upper-case identifier for reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "NON_FINITE",
            Error::NormMismatch(..) => "NORM_MISMATCH",
            Error::KindMismatch(_) => "KIND_MISMATCH",
            Error::Dimension(_) => "DIMENSION",
            Error::InvalidInput(_) => "INVALID_INPUT",
            Error::NonContracting { .. } => "NON_CONTRACTING",
            Error::NoConvergence(_) => "NO_CONVERGENCE",
            Error::NotInvertible => "NOT_INVERTIBLE",
            Error::CircleEigenvalue(_) => "CIRCLE_EIGENVALUE",
            Error::IllConditioned(_) => "ILL_CONDITIONED",
            Error::InvalidSplitting(_) => "INVALID_SPLITTING",
            Error::HypothesisFailed(_) => "HYPOTHESIS_FAILED",
            Error::NotCertified => "NOT_CERTIFIED",
            Error::BadFactor(_) => "BAD_FACTOR",
            Error::CannotSeparate { .. } => "CANNOT_SEPARATE",
            Error::NotContraction { .. } => "NOT_CONTRACTION",
            Error::TrajectoryBudget(_) => "TRAJECTORY_BUDGET",
            Error::NotContractiveSpectrum(_) => "NOT_CONTRACTIVE_SPECTRUM",
            Error::NotHomoclinic => "NOT_HOMOCLINIC",
            Error::Io(_) => "IO_ERROR",
            Error::NotAChain { .. } => "NOT_A_CHAIN",
        }
    }
}
