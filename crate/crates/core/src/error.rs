use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("concept {concept} has no contrast activations")]
    EmptyContrastSet { concept: usize },

    #[error("concept {concept}: every stimulus difference is zero")]
    DegenerateSet { concept: usize },

    #[error("layer {layer}, concept {concept}: {source}")]
    Extraction {
        layer: u32,
        concept: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersionMismatch { expected: u32, found: u32 },

    #[error("checksum mismatch for {file}: manifest {expected:08x}, computed {found:08x}")]
    ChecksumMismatch {
        file: String,
        expected: u32,
        found: u32,
    },

    #[error("task {task_id}: {available} undesirable concepts available, {requested} requested")]
    InsufficientUndesirable {
        task_id: String,
        requested: usize,
        available: usize,
    },

    #[error("direction has norm {norm}, expected unit norm")]
    NonUnitDirection { norm: f64 },

    #[error("matrix is rank deficient (rank {rank} < {required})")]
    RankDeficient { rank: usize, required: usize },

    #[error("no dictionary for layer {0}")]
    MissingLayerDictionary(u32),

    #[error("all singular values are zero")]
    DegenerateSpectrum,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("solver did not converge after {iterations} iterations (kkt residual {kkt_residual:e})")]
    NotConverged { iterations: usize, kkt_residual: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Process exit code: 2 for configuration and parameter errors, 4 for
    /// non-convergence, 3 for everything else (bad or missing data).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParams(_) => 2,
            Error::NotConverged { .. } => 4,
            Error::Stage { source, .. } | Error::Extraction { source, .. } => source.exit_code(),
            _ => 3,
        }
    }

    pub fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>) -> impl FnOnce(serde_json::Error) -> Error {
        let path = path.into();
        move |source| Error::Json { path, source }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, found: usize) -> Error {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        }
    }
}
