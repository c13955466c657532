//! Region model and the global-regional parity (GRP) objective.

mod grp;
mod kof;
mod region;

pub use grp::{
    aggregate_quality, best_parity_select, compute_grp, Candidate, GrpConfig, QualitySet, Scope,
    Selection,
};
pub use kof::{derive_alpha, GlobalizationTable};
pub use region::{Region, RegionPartition, Resolved};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParityError {
    #[error("no metrics in {0} quality set")]
    EmptyQuality(String),
    #[error("non-finite quality value: {0}")]
    InvalidQuality(String),
    #[error("metric {0:?} listed twice")]
    DuplicateMetric(String),
    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(String),
    #[error("no globalization index for {region} in {year}")]
    MissingIndex { region: String, year: u16 },
    #[error("invalid globalization table: {0}")]
    InvalidIndexTable(String),
    #[error("invalid region partition: {0}")]
    InvalidPartition(String),
    #[error("no candidates to select from")]
    EmptyCandidates,
}
