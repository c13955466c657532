//! Average rank of models over human-scored items (higher is better).

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanItemScores {
    pub item: String,
    /// Model id → score.
    pub scores: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub models: Vec<String>,
    pub items: usize,
    /// Mean rank per model, in `models` order.
    pub overall: Vec<f64>,
    /// The same, restricted to items of each language.
    pub by_language: BTreeMap<String, Vec<f64>>,
}

pub fn read_human_scores(path: &Path) -> Result<Vec<HumanItemScores>, EvalError> {
    let file = std::fs::File::open(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    let mut items = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let at = format!("{}:{}", path.display(), i + 1);
        let line = line.map_err(|e| EvalError::Io(format!("{at}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| EvalError::Parse(format!("{at}: {e}")))?);
    }
    Ok(items)
}

/// Ranks of `scores` where the lowest gets 1 and the highest gets `k`;
/// tied scores share the mean of the positions they occupy.
pub fn tied_ranks(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end, averaged.
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

/// Mean per-item rank of each model. `scale`, when given, is the inclusive
/// range every score must fall in.
pub fn average_rank(
    items: &[HumanItemScores],
    models: &[String],
    scale: Option<(f64, f64)>,
) -> Result<RankReport, EvalError> {
    if models.is_empty() {
        return Err(EvalError::Invalid("no models to rank".into()));
    }
    if items.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    let mut sums = vec![0.0; models.len()];
    let mut by_lang: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    for item in items {
        let mut scores = Vec::with_capacity(models.len());
        for model in models {
            let &value = item
                .scores
                .get(model)
                .ok_or_else(|| EvalError::IncompleteItem { item: item.item.clone(), model: model.clone() })?;
            let in_scale = scale.map_or(true, |(lo, hi)| (lo..=hi).contains(&value));
            if !value.is_finite() || !in_scale {
                return Err(EvalError::OutOfScale { item: item.item.clone(), model: model.clone(), value });
            }
            scores.push(value);
        }
        let ranks = tied_ranks(&scores);
        for (s, r) in sums.iter_mut().zip(&ranks) {
            *s += r;
        }
        if let Some(lang) = &item.language {
            let (lang_sums, n) = by_lang.entry(lang.clone()).or_insert_with(|| (vec![0.0; models.len()], 0));
            for (s, r) in lang_sums.iter_mut().zip(&ranks) {
                *s += r;
            }
            *n += 1;
        }
    }
    let n = items.len() as f64;
    Ok(RankReport {
        models: models.to_vec(),
        items: items.len(),
        overall: sums.into_iter().map(|s| s / n).collect(),
        by_language: by_lang
            .into_iter()
            .map(|(lang, (s, k))| (lang, s.into_iter().map(|v| v / k as f64).collect()))
            .collect(),
    })
}
