//! Seeded assembly of the fine-tuning mix from named record pools.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use super::{CorpusRecord, FilterError};
use crate::seed::stage_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proportion {
    /// Share of the pool in [0, 1]; the count is `round(p * n)`.
    Fraction(f64),
    Count(usize),
}

impl Proportion {
    pub fn requested(&self, pool: usize) -> Result<usize, FilterError> {
        match *self {
            Proportion::Count(k) => Ok(k),
            Proportion::Fraction(p) if (0.0..=1.0).contains(&p) => Ok((p * pool as f64).round() as usize),
            Proportion::Fraction(p) => Err(FilterError::InvalidProportion(format!("{p} is outside [0, 1]"))),
        }
    }
}

impl std::str::FromStr for Proportion {
    type Err = FilterError;

    /// `0.3` and `30%` are fractions, `#500` is an absolute count.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || FilterError::InvalidProportion(format!("cannot parse {s:?}"));
        if let Some(count) = s.strip_prefix('#') {
            return count.parse().map(Proportion::Count).map_err(|_| bad());
        }
        let value = match s.strip_suffix('%') {
            Some(pct) => pct.parse::<f64>().map_err(|_| bad())? / 100.0,
            None => s.parse::<f64>().map_err(|_| bad())?,
        };
        if !(0.0..=1.0).contains(&value) {
            return Err(FilterError::InvalidProportion(format!("{s} is outside [0, 1]")));
        }
        Ok(Proportion::Fraction(value))
    }
}

#[derive(Debug, Clone)]
pub struct MixSource {
    pub name: String,
    pub records: Vec<CorpusRecord>,
    pub proportion: Proportion,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SourceCount {
    pub pool: usize,
    pub requested: usize,
    pub selected: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MixManifest {
    pub seed: u64,
    pub total: usize,
    pub sources: BTreeMap<String, SourceCount>,
    pub languages: BTreeMap<String, usize>,
    /// Sampled records dropped because an earlier source already had the id.
    pub duplicates_dropped: usize,
}

/// Indices drawn from a pool of `n`, ascending. Without replacement unless
/// `k > n` and `with_replacement` is set, in which case every index appears
/// once and the surplus is drawn with replacement.
fn sample_indices(rng: &mut impl Rng, n: usize, k: usize, with_replacement: bool) -> Option<Vec<usize>> {
    if k <= n {
        let mut picked = index::sample(rng, n, k).into_vec();
        picked.sort_unstable();
        return Some(picked);
    }
    if !with_replacement || n == 0 {
        return None;
    }
    let mut picked: Vec<usize> = (0..n).collect();
    picked.extend((0..k - n).map(|_| rng.gen_range(0..n)));
    picked.sort_unstable();
    Some(picked)
}

/// Samples each source independently (its stream seeded from `seed` and the
/// source name) and concatenates the samples in source order. Ids stay
/// unique: repeated draws get a `~{n}` suffix, and a record whose id was
/// already taken from an earlier source is dropped.
pub fn build_sft_mix(
    sources: &[MixSource],
    seed: u64,
    with_replacement: bool,
) -> Result<(Vec<CorpusRecord>, MixManifest), FilterError> {
    let mut names = HashSet::new();
    for s in sources {
        if !names.insert(s.name.as_str()) {
            return Err(FilterError::InvalidProportion(format!("source {} listed twice", s.name)));
        }
    }
    let mut manifest = MixManifest { seed, ..Default::default() };
    let mut seen: HashSet<String> = HashSet::new();
    let mut out = Vec::new();
    for source in sources {
        let n = source.records.len();
        let k = source.proportion.requested(n)?;
        let mut rng = stage_rng(seed, &format!("mix/{}", source.name));
        let picked = sample_indices(&mut rng, n, k, with_replacement).ok_or_else(|| FilterError::InsufficientPool {
            pool: source.name.clone(),
            requested: k,
            available: n,
        })?;
        let mut selected = 0;
        let mut previous = None;
        let mut repeat = 0;
        for i in picked {
            let mut record = source.records[i].clone();
            if previous == Some(i) {
                repeat += 1;
                record.id = format!("{}~{repeat}", record.id);
            } else {
                repeat = 0;
            }
            previous = Some(i);
            if !seen.insert(record.id.clone()) {
                manifest.duplicates_dropped += 1;
                continue;
            }
            *manifest.languages.entry(record.language.clone()).or_default() += 1;
            out.push(record);
            selected += 1;
        }
        manifest.sources.insert(source.name.clone(), SourceCount { pool: n, requested: k, selected });
    }
    manifest.total = out.len();
    Ok((out, manifest))
}
