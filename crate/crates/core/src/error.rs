use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: only 2 and 3 are allowed")]
    BadDim(usize),

    #[error("modes per axis must be even, got {0}")]
    OddN(usize),

    #[error("modes per axis must be at least 8, got {0}")]
    GridTooSmall(usize),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("negative Stokes power {0} requested on a field with nonzero mean")]
    NegativePowerOnMean(f64),

    #[error("negative evolution time {0}")]
    NegativeTime(f64),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("momentum field is not (1 + alpha^2 A) u (relative mismatch {0:.3e})")]
    InconsistentPair(f64),

    #[error("solution diverged at step {step} (t = {t})")]
    Diverged { step: usize, t: f64 },

    #[error("Picard iteration stopped contracting at iterate {iterate}")]
    NoContraction { iterate: usize },

    #[error("empty time mesh")]
    EmptyMesh,

    #[error("evaluation time {0} is not a mesh node")]
    NotAMeshNode(f64),

    #[error("need at least two diagnostic records, got {0}")]
    TooFewRecords(usize),

    #[error("fit window [{0}, {1}] contains fewer than two samples")]
    EmptyWindow(f64, f64),

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error("bad value for `{key}` on line {line}: {msg}")]
    BadValue {
        key: String,
        line: usize,
        msg: String,
    },

    #[error("s = {s} is outside the global range [{min}, 1) for dimension {dim}")]
    RegimeViolation { s: f64, dim: usize, min: f64 },

    #[error("bad snapshot magic")]
    BadMagic,

    #[error("unsupported snapshot format version {0}")]
    VersionMismatch(u32),

    #[error("corrupt snapshot payload: {0}")]
    CorruptPayload(String),

    #[error("nothing to write")]
    EmptyOutput,

    #[error("{path}: {source}")]
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
