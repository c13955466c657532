use serde::Serialize;

use super::{CorpusRecord, FilterError};
use crate::parity::{RegionPartition, Resolved};

/// True when the record's region resolves to `region`. Codes the partition
/// cannot resolve are errors rather than a silent `false`.
pub fn regional_filter(
    record: &CorpusRecord,
    partition: &RegionPartition,
    region: &str,
) -> Result<bool, FilterError> {
    match partition.resolve(&record.region) {
        Some(Resolved::Region(id)) => Ok(id == region),
        Some(Resolved::Global) => Ok(false),
        None => Err(FilterError::UnknownRegion { record: record.id.clone(), code: record.region.clone() }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub target_region: String,
    /// Records with reward >= tau are kept.
    pub tau: f64,
}

impl FilterConfig {
    pub fn new(target_region: impl Into<String>, tau: f64, partition: &RegionPartition) -> Result<Self, FilterError> {
        let target_region = target_region.into();
        if partition.region(&target_region).is_none() {
            return Err(FilterError::UnknownRegion { record: String::new(), code: target_region });
        }
        if !tau.is_finite() {
            return Err(FilterError::InvalidThreshold(tau));
        }
        Ok(Self { target_region, tau })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterSummary {
    pub input: usize,
    pub kept: usize,
    pub out_of_region: usize,
    pub below_threshold: usize,
}

impl FilterSummary {
    pub fn absorb(&mut self, other: &FilterSummary) {
        self.input += other.input;
        self.kept += other.kept;
        self.out_of_region += other.out_of_region;
        self.below_threshold += other.below_threshold;
    }
}

/// Record-at-a-time regional + reward filter.
pub struct QualityFilter<'a> {
    cfg: &'a FilterConfig,
    partition: &'a RegionPartition,
    summary: FilterSummary,
}

impl<'a> QualityFilter<'a> {
    pub fn new(cfg: &'a FilterConfig, partition: &'a RegionPartition) -> Self {
        Self { cfg, partition, summary: FilterSummary::default() }
    }

    pub fn admit(&mut self, record: &CorpusRecord) -> Result<bool, FilterError> {
        let reward = record.reward.ok_or_else(|| FilterError::MissingReward(record.id.clone()))?;
        let in_region = regional_filter(record, self.partition, &self.cfg.target_region)?;
        self.summary.input += 1;
        let keep = if !in_region {
            self.summary.out_of_region += 1;
            false
        } else if reward < self.cfg.tau {
            self.summary.below_threshold += 1;
            false
        } else {
            self.summary.kept += 1;
            true
        };
        Ok(keep)
    }

    pub fn summary(&self) -> &FilterSummary {
        &self.summary
    }

    pub fn into_summary(self) -> FilterSummary {
        self.summary
    }
}

/// Records in the target region with reward >= tau, in input order.
pub fn build_filtered_set(
    records: impl IntoIterator<Item = CorpusRecord>,
    cfg: &FilterConfig,
    partition: &RegionPartition,
) -> Result<(Vec<CorpusRecord>, FilterSummary), FilterError> {
    let mut filter = QualityFilter::new(cfg, partition);
    let mut kept = Vec::new();
    for record in records {
        if filter.admit(&record)? {
            kept.push(record);
        }
    }
    Ok((kept, filter.into_summary()))
}
