use thiserror::Error;

/// Errors raised by the clustering, estimation and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("dimension mismatch: expected dim={expected}, got dim={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point has zero dimensions")]
    ZeroDimension,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("weights must be strictly positive and one per point")]
    InvalidWeights,

    #[error("invalid number of clusters k={k} for m={m} points")]
    InvalidK { k: usize, m: usize },

    #[error("center set is empty")]
    EmptyCenters,

    #[error("subset is empty")]
    EmptySubset,

    #[error("enumeration guard exceeded for {what}: limit {limit}, got {got}")]
    GuardExceeded {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("no valid sample: {0}")]
    NoValidSample(String),

    #[error("ledger violation: {0}")]
    LedgerViolation(String),

    #[error("not enough minibatches: need {needed}, got {got}")]
    NotEnoughBatches { needed: usize, got: usize },

    #[error("not enough live synopses: need {needed}, got {got}")]
    NotEnoughSynopses { needed: usize, got: usize },

    #[error("epsilon-tilde is undefined ({reason}); use the Laplace-mechanism mode (sigma2 = 2*sqrt(2)*k*R/epsilon)")]
    EpsilonTildeUndefined { reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trial {index} failed: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
