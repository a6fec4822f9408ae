use thiserror::Error;

use crate::quad::QuadError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the support box")]
    OutsideSupport { point: Vec<f64> },
    #[error("singular local design: min eigenvalue {min_eig:.3e}, {n_local} observations in window")]
    SingularDesign { min_eig: f64, n_local: usize },
    #[error("invalid bandwidth {name} = {value}: must be positive and finite")]
    InvalidBandwidth { name: &'static str, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("unknown kernel family `{0}`")]
    UnknownKernel(String),
    #[error("unknown data-generating process `{0}`")]
    UnknownDgp(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}
