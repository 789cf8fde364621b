use thiserror::Error;

/// Errors produced by stream loading, generators, learners, and pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {msg}")]
    MalformedRow { line: usize, msg: String },

    #[error("record {id}: label_available_at {label_at} precedes timestamp {ts}")]
    LabelBeforeTimestamp { id: String, ts: i64, label_at: i64 },

    #[error("duplicate record id {0}")]
    DuplicateId(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty stream")]
    EmptyStream,

    #[error("split fraction {0} must lie in (0, 1)")]
    BadSplitFraction(f64),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("no token survives the frequency threshold")]
    EmptyVocabulary,

    #[error("isolation forest needs at least 2 training points, got {0}")]
    TooFewPoints(usize),

    #[error("bootstrap record {0} has no label")]
    UnlabeledBootstrap(String),

    #[error("no stored prediction for id {0}")]
    UnknownPrediction(String),

    #[error("label for id {0} already delivered")]
    DuplicateDelivery(String),

    #[error("pending-prediction map is full (capacity {0})")]
    PendingOverflow(usize),

    #[error("drift retrain has no source records (warning buffer and reservoir empty)")]
    EmptyRetrainSource,

    #[error("metric series needs at least 2 points, got {0}")]
    ShortSeries(usize),

    #[error("empty confusion matrix")]
    EmptyMatrix,

    #[error("{0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
