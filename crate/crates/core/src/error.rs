use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported constellation `{0}` (expected BPSK, QPSK or 16QAM)")]
    UnsupportedConstellation(String),

    #[error("unknown channel profile `{0}` (expected PedestrianB, VehicularA or flat)")]
    UnknownProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("noise variance must be positive and finite, got {0}")]
    InvalidNoiseVariance(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("too few samples for separation: {got} < floor {floor}")]
    InsufficientSamples { got: usize, floor: usize },

    #[error("observation covariance has rank {rank} < {required} sources")]
    RankDeficientCovariance { rank: usize, required: usize },

    #[error("phase estimate undefined: sum of x^{order} is exactly zero")]
    UndefinedPhase { order: u32 },

    #[error("symbol matrix is rank deficient for receive antenna row {row}")]
    RankDeficientSymbols { row: usize },

    #[error("classes are inseparable: {0}")]
    Inseparable(String),

    #[error("SVM solver stopped with duality gap {gap:e} after {iterations} iterations")]
    SvmNotConverged { gap: f64, iterations: usize },

    #[error("no SVM entry within {max_distance_db} dB of {snr_db} dB")]
    NoSvmEntry { snr_db: f64, max_distance_db: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("model format error at line {line}: {msg}")]
    ModelFormat { line: usize, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
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
