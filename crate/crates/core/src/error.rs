use thiserror::Error;

use crate::partition::KeyKind;
use crate::sampling::NegativeStrategy;

/// Errors produced anywhere in the evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },

    #[error("line {line}: negative timestamp {value}")]
    NegativeTimestamp { line: u64, value: f64 },

    #[error("line {line}: self-loop on node `{label}` (self-loops are disabled)")]
    SelfLoop { line: u64, label: String },

    #[error("event stream is empty")]
    EmptyStream,

    #[error("invalid timestamp {0}: must be finite and non-negative")]
    InvalidTimestamp(f64),

    #[error("test ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),

    #[error("degenerate split: cutoff {t_split} leaves the train set empty")]
    DegenerateSplit { t_split: f64 },

    #[error("key kind `{0}` needs a directed or bipartite graph")]
    RoleKindOnUndirected(KeyKind),

    #[error("no legal {strategy} candidate for positive ({src}, {dst}, t={t})")]
    EmptyCandidateSet {
        strategy: NegativeStrategy,
        src: u32,
        dst: u32,
        t: f64,
    },

    #[error("unknown negative sampling strategy `{0}`")]
    UnknownStrategy(String),

    #[error("strategy {0} does not occur in the score log")]
    StrategyNotInLog(NegativeStrategy),

    #[error("AUC is undefined: {0} side is empty")]
    UndefinedAuc(&'static str),

    #[error("non-finite score {0}")]
    NonFiniteScore(f64),

    #[error("no batch in the requested period has both positives and negatives")]
    NoUsableBatches,

    #[error("invalid score log{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    InvalidLog { line: Option<u64>, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid_log(line: impl Into<Option<u64>>, msg: impl Into<String>) -> Self {
        Error::InvalidLog {
            line: line.into(),
            msg: msg.into(),
        }
    }
}
