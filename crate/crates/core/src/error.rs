//! Error types shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("singular matrix: {what}")]
    Singular { what: String },

    #[error("non-finite values in {what}")]
    NonFinite { what: String },

    #[error("cross Gramian needs a square system (M = Q), got M={inputs}, Q={outputs}; use empirical_wz for non-square systems")]
    NonSquareSystem { inputs: usize, outputs: usize },

    #[error("empty parameter set")]
    EmptyParameterSet,

    #[error("Gramian evaluation failed at parameter sample {index} ({theta:?})")]
    ParameterSample {
        index: usize,
        theta: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("eigenvalue iteration failed to converge")]
    EigenvalueFailure,

    #[error("SVD failed to converge")]
    SvdFailure,

    #[error(
        "balancing breakdown: correction matrix condition number {cond:.3e} exceeds {limit:.1e}"
    )]
    BalancingBreakdown { cond: f64, limit: f64 },

    #[error("matrix is numerically zero: {what}")]
    ZeroMatrix { what: String },

    #[error("invalid reduced order {order}: must be in 1..={rank}")]
    InvalidOrder { order: usize, rank: usize },

    #[error("zero full-order normalizer for norm {norm}")]
    ZeroNormalizer { norm: String },

    #[error("invalid error graph: {reason}")]
    InvalidGraph { reason: String },

    #[error("balanced realization carries no cross Gramian (required by the H2 estimate)")]
    MissingCrossGramian,

    #[error("no balanced realization available for the realization-based norm estimates")]
    MissingRealization,

    #[error("thermal block geometry: {reason}")]
    Geometry { reason: String },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("invalid configuration: {reason}")]
    Config { reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {reason}")]
    MatrixFormat {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
