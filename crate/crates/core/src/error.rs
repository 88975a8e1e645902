use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sampling step {dt:e} s violates Nyquist for the carrier (need <= {limit:e} s)")]
    Nyquist { dt: f64, limit: f64 },

    #[error("echo of target {index} is truncated: |delay| reaches {delay:e} s, window half-width {half_width:e} s")]
    EchoTruncated { index: usize, delay: f64, half_width: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("shift of {shift:e} s exceeds the sampled fast-time span")]
    ShiftOutOfSpan { shift: f64 },

    #[error("SVD did not converge after {iterations} iterations (rank {rank}, residual {residual:e})")]
    SvdNonConvergence { iterations: usize, rank: usize, residual: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("degenerate symbol: xi = 0 gives a delta-function symbol")]
    DeltaSymbol,

    #[error("no moving energy detected (focus variation {variation:e})")]
    NoMovingEnergy { variation: f64 },

    #[error("truncated header")]
    TruncatedHeader,

    #[error("bad magic")]
    BadMagic,

    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),

    #[error("dimension overflow ({rows} x {cols})")]
    DimensionOverflow { rows: u64, cols: u64 },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("axis mismatch")]
    AxisMismatch,

    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
