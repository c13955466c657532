use serde::Serialize;
use serde_json::Value;

use super::external::{exchange, CommandSpec};
use super::{CorpusRecord, FilterError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRequest {
    pub id: String,
    pub text: String,
    pub image_ref: Option<String>,
}

impl ScoreRequest {
    pub fn for_record(r: &CorpusRecord) -> Self {
        Self { id: r.id.clone(), text: r.text.clone(), image_ref: r.image_ref.clone() }
    }
}

/// Assigns a quality reward to each request in a batch.
pub trait Scorer: Sync {
    fn score_batch(&self, batch: &[ScoreRequest]) -> Vec<Result<f64, String>>;
}

/// In-process scorer backed by a closure.
pub struct FnScorer<F>(pub F);

impl<F> Scorer for FnScorer<F>
where
    F: Fn(&ScoreRequest) -> Result<f64, String> + Sync,
{
    fn score_batch(&self, batch: &[ScoreRequest]) -> Vec<Result<f64, String>> {
        batch.iter().map(&self.0).collect()
    }
}

/// External scorer speaking `{"id","text","image_ref"}` → `{"id","reward"}`.
/// One process is started per batch.
pub struct CommandScorer {
    pub command: CommandSpec,
}

impl Scorer for CommandScorer {
    fn score_batch(&self, batch: &[ScoreRequest]) -> Vec<Result<f64, String>> {
        let requests: Vec<Value> =
            batch.iter().map(|r| serde_json::to_value(r).expect("request serializes")).collect();
        match exchange(&self.command, &requests) {
            Ok(responses) => batch
                .iter()
                .map(|r| match responses.get(&r.id) {
                    None => Err("no response".to_string()),
                    Some(v) => v
                        .get("reward")
                        .and_then(Value::as_f64)
                        .ok_or_else(|| format!("response without numeric reward: {v}")),
                })
                .collect(),
            Err(e) => batch.iter().map(|_| Err(e.clone())).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOptions {
    /// Overwrite rewards that are already present.
    pub rescore: bool,
    pub batch_size: usize,
    /// Batches scored concurrently.
    pub jobs: usize,
    /// Largest tolerated fraction of failed records before the whole call fails.
    pub max_failure_rate: f64,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        Self { rescore: false, batch_size: 64, jobs: 1, max_failure_rate: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoringFailure {
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOutcome {
    /// Successfully scored (or already scored) records, input order.
    pub records: Vec<CorpusRecord>,
    pub failures: Vec<ScoringFailure>,
    pub scored: usize,
    pub reused: usize,
}

/// Populates `reward` on every record. Records whose scoring fails are moved
/// to `failures`; the call fails only when the failure rate exceeds the cap.
pub fn score_rewards(
    records: Vec<CorpusRecord>,
    scorer: &dyn Scorer,
    opts: &ScoreOptions,
) -> Result<ScoreOutcome, FilterError> {
    let batch_size = opts.batch_size.max(1);
    let pending: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| opts.rescore || r.reward.is_none())
        .map(|(i, _)| i)
        .collect();
    let batches: Vec<Vec<ScoreRequest>> = pending
        .chunks(batch_size)
        .map(|chunk| chunk.iter().map(|&i| ScoreRequest::for_record(&records[i])).collect())
        .collect();

    let results = run_bounded(opts.jobs, &batches, |batch| {
        let mut out = scorer.score_batch(batch);
        out.resize_with(batch.len(), || Err("scorer returned too few results".into()));
        out
    });

    let mut rewards: Vec<Option<Result<f64, String>>> = vec![None; records.len()];
    for (&idx, result) in pending.iter().zip(results.into_iter().flatten()) {
        let checked = result.and_then(|r| if r.is_finite() { Ok(r) } else { Err(format!("non-finite reward {r}")) });
        rewards[idx] = Some(checked);
    }

    let total = pending.len();
    let mut outcome = ScoreOutcome { records: Vec::with_capacity(records.len()), failures: Vec::new(), scored: 0, reused: 0 };
    for (mut record, reward) in records.into_iter().zip(rewards) {
        match reward {
            None => {
                outcome.reused += 1;
                outcome.records.push(record);
            }
            Some(Ok(r)) => {
                record.reward = Some(r);
                outcome.scored += 1;
                outcome.records.push(record);
            }
            Some(Err(message)) => outcome.failures.push(ScoringFailure { id: record.id, message }),
        }
    }
    let failed = outcome.failures.len();
    if failed > 0 && failed as f64 > opts.max_failure_rate * total as f64 {
        return Err(FilterError::ScoringFailed {
            failed,
            total,
            first: outcome.failures[0].message.clone(),
        });
    }
    Ok(outcome)
}

/// Maps `f` over `items` with at most `jobs` concurrent calls, keeping order.
pub(crate) fn run_bounded<T: Sync, R: Send>(jobs: usize, items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    use rayon::prelude::*;
    let jobs = jobs.max(1);
    if jobs == 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}
