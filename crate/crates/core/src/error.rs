use thiserror::Error;

use crate::dynamics::Algo;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spectrum is empty")]
    EmptySpectrum,

    #[error("eigenvalue {value} is not strictly positive")]
    NonPositiveEigenvalue { value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mode at lambda = {lambda} is unstable (spectral radius {rho})")]
    UnstableMode { lambda: f64, rho: f64 },

    #[error("configuration is unstable: mode at lambda = {lambda} has spectral radius {rho}")]
    Unstable { lambda: f64, rho: f64 },

    #[error("dimension n = {n} is too small (need n >= {min})")]
    DimensionTooSmall { n: usize, min: usize },

    #[error("gradient map is not a contraction (eta = {eta})")]
    NotContractive { eta: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no convergence guarantee over the function class for {0}")]
    NoGuarantee(Algo),

    #[error("{0} is not supported here")]
    UnsupportedAlgorithm(Algo),

    #[error("rate cap with c = {c} admits no stabilizing parameters")]
    InfeasibleCap { c: f64 },

    #[error("condition number {kappa} is too small (need kappa > 2)")]
    KappaTooSmall { kappa: f64 },

    #[error("torus has {n} nodes, above the {limit} limit")]
    SizeOverflow { n: u64, limit: u64 },

    #[error("invalid torus: {0}")]
    InvalidTorus(String),

    #[error("simulation diverged at step {step}")]
    NonFinite { step: usize },
}

impl Error {
    /// Stable machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptySpectrum => "EmptySpectrum",
            Error::NonPositiveEigenvalue { .. } => "NonPositiveEigenvalue",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::UnstableMode { .. } => "UnstableMode",
            Error::Unstable { .. } => "Unstable",
            Error::DimensionTooSmall { .. } => "DimensionTooSmall",
            Error::NotContractive { .. } => "NotContractive",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NoGuarantee(_) => "NoGuarantee",
            Error::UnsupportedAlgorithm(_) => "UnsupportedAlgorithm",
            Error::InfeasibleCap { .. } => "InfeasibleCap",
            Error::KappaTooSmall { .. } => "KappaTooSmall",
            Error::SizeOverflow { .. } => "SizeOverflow",
            Error::InvalidTorus(_) => "InvalidTorus",
            Error::NonFinite { .. } => "NonFinite",
        }
    }
}
