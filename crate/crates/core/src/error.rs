use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Ar1Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Ar1Error {
    #[error("unsupported Daubechies order {order}: supported orders are 1..=10")]
    UnsupportedOrder { order: usize },

    #[error("invalid wavelet basis: {0}")]
    InvalidBasis(String),

    #[error("sample length {len} is not a power of two of at least {min}")]
    BadLength { len: usize, min: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("noise covariance is indefinite: most negative eigenvalue {min_eigenvalue:e} below tolerance {tolerance:e}")]
    IndefiniteCovariance { min_eigenvalue: f64, tolerance: f64 },

    #[error("stationarity check failed: ||rho^j|| >= 1 for all j <= {j0_max} (last norm {last_norm})")]
    NotStationary { j0_max: usize, last_norm: f64 },

    #[error("trajectory too short: need at least {needed} states, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("eigenvalue gap {gap:e} at index {index} is not positive; eigenvalues must be simple (Assumption A1)")]
    NonPositiveGap { index: usize, gap: f64 },

    #[error("empirical eigenvalue C_(n,{k_n}) = {eigenvalue:e} is not positive (Assumption A2); use a smaller k_n")]
    SingularCovariance { k_n: usize, eigenvalue: f64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Ar1Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Ar1Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Ar1Error::Config { .. } | Ar1Error::InvalidParameter(_) | Ar1Error::InvalidBasis(_) => 2,
            Ar1Error::NotStationary { .. } | Ar1Error::IndefiniteCovariance { .. } => 3,
            Ar1Error::Io { .. } | Ar1Error::Parse { .. } => 5,
            _ => 4,
        }
    }
}
