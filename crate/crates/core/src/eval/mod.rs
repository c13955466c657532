//! Evaluation aggregation: benchmark breakdowns with GRP, reward-model
//! pairwise agreement and average-rank aggregation of human scores.

pub mod agreement;
pub mod breakdown;
pub mod metrics;
pub mod normalize;
pub mod rank;

pub use agreement::{pairwise_agreement, AgreementReport, PairCount};
pub use breakdown::{build_breakdown, Breakdown, ModelBreakdown};
pub use metrics::{read_metric_rows, read_metrics_csv, read_metrics_jsonl, MetricRow, ScopeTag};
pub use normalize::{minmax, minmax_normalize};
pub use rank::{average_rank, read_human_scores, tied_ranks, HumanItemScores, RankReport};

use crate::parity::ParityError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed input at {0}")]
    Parse(String),
    #[error("model {model}: scope {scope:?} is neither global, regional nor a known region or country")]
    UnknownScope { model: String, scope: String },
    #[error("model {model} has no {missing} metrics")]
    IncompleteModel { model: String, missing: String },
    #[error("model {0} has rows with different beta values")]
    InconsistentBeta(String),
    #[error("no scores to normalize")]
    EmptyScores,
    #[error("no pair of items has strictly ordered human scores")]
    NoOrderedPairs,
    #[error("item {item} has no score for model {model}")]
    IncompleteItem { item: String, model: String },
    #[error("item {item}: score {value} for model {model} is outside the scale")]
    OutOfScale { item: String, model: String, value: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Parity(#[from] ParityError),
}
