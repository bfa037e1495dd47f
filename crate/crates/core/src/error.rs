use thiserror::Error;

use crate::objects::Side;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mode space: {0}")]
    InvalidModeSpace(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("state norm squared {norm_sqr} deviates from 1 by more than {tol:e}")]
    NotNormalized { norm_sqr: f64, tol: f64 },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace {0} deviates from 1")]
    TraceNotOne(f64),

    #[error("negative ensemble weight {0}")]
    NegativeWeight(f64),

    #[error("matrix is not unitary (max |U†U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("transfer matrix is not passive (largest singular value {0})")]
    NotPassive(f64),

    #[error("detected window {window} outside 1..={dim}")]
    InvalidWindow { window: usize, dim: usize },

    #[error("object acts on the {got:?} side, expected {expected:?}")]
    WrongSide { expected: Side, got: Side },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state is not of diagonal-entangled form (off-diagonal weight {0:e})")]
    NotDiagonalEntangled(f64),

    #[error("reference object must be lossless with a full detection window")]
    LossyReference,

    #[error("product mimic undefined: every primed photon is lost (P0 = {0})")]
    AllPhotonsLost(f64),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("spare mode {spare} must lie outside the detected window 1..={window} and inside 1..={dim}")]
    InvalidSpareMode { spare: usize, window: usize, dim: usize },
}
