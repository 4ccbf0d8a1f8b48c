use thiserror::Error;

/// Errors produced by the identification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("marker index {index} out of range (model has {count} markers)")]
    InvalidMarker { index: usize, count: usize },

    #[error("joint vector has {got} entries, model has {expected} joints")]
    JointCount { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty parameter selection")]
    EmptySelection,

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("q2 = {q2_deg:.6} deg matches no compliance bucket")]
    NoBucket { q2_deg: f64 },

    #[error("no noise entry for configuration {0}")]
    MissingNoise(u32),

    #[error("inconsistent dimensions: {0}")]
    Dimension(String),

    #[error("under-determined system: {rows} equations for {params} parameters")]
    Underdetermined { rows: usize, params: usize },

    #[error("rank-deficient information matrix (rank {rank} of {params}); unidentifiable combinations: {directions}")]
    RankDeficient {
        rank: usize,
        params: usize,
        directions: String,
    },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("group `{group}` has {count} replicates, at least 2 required")]
    TooFewReplicates { group: String, count: usize },

    #[error("covariance diagonal entry {index} is negative ({value:e})")]
    NegativeVariance { index: usize, value: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{failed} of {trials} Monte Carlo trials failed (first: {first})")]
    TooManyFailures {
        failed: usize,
        trials: usize,
        first: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
