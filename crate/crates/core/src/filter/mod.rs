//! Regional quality filtering, translation augmentation and mix assembly
//! over JSONL corpora.

mod external;
pub mod mix;
pub mod record;
pub mod score;
pub mod select;
pub mod translate;

pub use external::CommandSpec;
pub use mix::{build_sft_mix, MixManifest, MixSource, Proportion, SourceCount};
pub use record::{read_corpus, to_jsonl_line, write_corpus, CorpusRecord, JsonlReader};
pub use score::{score_rewards, CommandScorer, FnScorer, ScoreOptions, ScoreOutcome, ScoreRequest, Scorer, ScoringFailure};
pub use select::{build_filtered_set, regional_filter, FilterConfig, FilterSummary, QualityFilter};
pub use translate::{
    execute_translations, job_id, plan_translations, sea_translator_assignments, CommandTranslator, ExecuteOptions,
    FnTranslator, JobFailure, TranslateRequest, TranslationJob, TranslationManifest, TranslationPlan, Translator,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FilterError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed record at {0}")]
    Parse(String),
    #[error("duplicate record id {0}")]
    DuplicateId(String),
    #[error("record {record:?}: unknown region code {code:?}")]
    UnknownRegion { record: String, code: String },
    #[error("record {0} has no reward; score it first")]
    MissingReward(String),
    #[error("threshold must be finite, got {0}")]
    InvalidThreshold(f64),
    #[error("scoring failed for {failed} of {total} records (first: {first})")]
    ScoringFailed { failed: usize, total: usize, first: String },
    #[error("no translator assigned for {0}")]
    MissingTranslator(String),
    #[error("invalid translation plan: {0}")]
    InvalidPlan(String),
    #[error("source {pool:?}: requested {requested} records but the pool has {available}")]
    InsufficientPool { pool: String, requested: usize, available: usize },
    #[error("invalid proportion: {0}")]
    InvalidProportion(String),
}
