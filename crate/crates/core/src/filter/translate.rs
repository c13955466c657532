//! Translation augmentation: planning (record × target language jobs routed
//! to translators) and resumable execution backed by an append-only journal.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::external::{exchange, CommandSpec};
use super::record::{to_jsonl_line, write_corpus, JsonlReader};
use super::score::run_bounded;
use super::{CorpusRecord, FilterError};

/// Job id for translating `record_id` into `lang`.
pub fn job_id(record_id: &str, lang: &str) -> String {
    format!("{record_id}#{lang}")
}

/// Translator routing used for the SEA case study: Gemma-3-27b where it was
/// strongest, Gemini-2.5-flash for the remaining languages.
pub fn sea_translator_assignments() -> BTreeMap<String, String> {
    let gemma = ["ind", "vie", "zsm", "fil", "zho"].map(|l| (l.to_string(), "gemma-3-27b".to_string()));
    let gemini = ["tha", "mya", "lao", "khm", "tam"].map(|l| (l.to_string(), "gemini-2.5-flash".to_string()));
    gemma.into_iter().chain(gemini).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationPlan {
    pub source_language: String,
    pub target_languages: Vec<String>,
    /// Target language → translator id.
    pub assignments: BTreeMap<String, String>,
    pub records: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TranslationJob<'a> {
    pub record_id: &'a str,
    pub target_lang: &'a str,
    pub translator: &'a str,
}

impl TranslationJob<'_> {
    pub fn id(&self) -> String {
        job_id(self.record_id, self.target_lang)
    }
}

impl TranslationPlan {
    /// Jobs in record-major order.
    pub fn jobs(&self) -> impl Iterator<Item = TranslationJob<'_>> {
        self.records.iter().flat_map(move |rid| {
            self.target_languages.iter().map(move |lang| TranslationJob {
                record_id: rid,
                target_lang: lang,
                translator: &self.assignments[lang],
            })
        })
    }

    pub fn len(&self) -> usize {
        self.records.len() * self.target_languages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Enumerates one job per (record, target language), routed by `assignments`.
pub fn plan_translations<'a>(
    records: impl IntoIterator<Item = &'a CorpusRecord>,
    source_language: &str,
    targets: &[String],
    assignments: &BTreeMap<String, String>,
) -> Result<TranslationPlan, FilterError> {
    if targets.is_empty() {
        return Err(FilterError::InvalidPlan("no target languages".into()));
    }
    let mut seen = HashSet::new();
    for lang in targets {
        if !seen.insert(lang) {
            return Err(FilterError::InvalidPlan(format!("target language {lang} listed twice")));
        }
        if !assignments.contains_key(lang) {
            return Err(FilterError::MissingTranslator(lang.clone()));
        }
    }
    let mut ids = HashSet::new();
    let mut record_ids = Vec::new();
    for r in records {
        if !ids.insert(r.id.as_str()) {
            return Err(FilterError::InvalidPlan(format!("record {} listed twice", r.id)));
        }
        record_ids.push(r.id.clone());
    }
    let assignments = targets.iter().map(|l| (l.clone(), assignments[l].clone())).collect();
    Ok(TranslationPlan {
        source_language: source_language.to_string(),
        target_languages: targets.to_vec(),
        assignments,
        records: record_ids,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslateRequest {
    pub id: String,
    pub text: String,
    pub target_lang: String,
}

pub trait Translator: Sync {
    fn translate_batch(&self, batch: &[TranslateRequest]) -> Vec<Result<String, String>>;
}

pub struct FnTranslator<F>(pub F);

impl<F> Translator for FnTranslator<F>
where
    F: Fn(&TranslateRequest) -> Result<String, String> + Sync,
{
    fn translate_batch(&self, batch: &[TranslateRequest]) -> Vec<Result<String, String>> {
        batch.iter().map(&self.0).collect()
    }
}

/// External translator speaking `{"id","text","target_lang"}` → `{"id","text"}`.
pub struct CommandTranslator {
    pub command: CommandSpec,
}

impl Translator for CommandTranslator {
    fn translate_batch(&self, batch: &[TranslateRequest]) -> Vec<Result<String, String>> {
        let requests: Vec<Value> =
            batch.iter().map(|r| serde_json::to_value(r).expect("request serializes")).collect();
        match exchange(&self.command, &requests) {
            Ok(responses) => batch
                .iter()
                .map(|r| match responses.get(&r.id) {
                    None => Err("no response".to_string()),
                    Some(v) => v
                        .get("text")
                        .and_then(Value::as_str)
                        .map(str::to_string)
                        .ok_or_else(|| format!("response without text: {v}")),
                })
                .collect(),
            Err(e) => batch.iter().map(|_| Err(e.clone())).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum JobStatus {
    Done,
    Failed,
}

#[derive(Debug, Serialize, Deserialize)]
struct JournalEntry {
    job: String,
    status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecuteOptions {
    pub output: PathBuf,
    pub journal: PathBuf,
    pub batch_size: usize,
    pub jobs: usize,
    /// Stop after attempting this many jobs (the rest stay pending).
    pub max_jobs: Option<usize>,
}

impl ExecuteOptions {
    pub fn new(output: impl Into<PathBuf>, journal: impl Into<PathBuf>) -> Self {
        Self { output: output.into(), journal: journal.into(), batch_size: 16, jobs: 1, max_jobs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JobFailure {
    pub job: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TranslationManifest {
    pub planned: usize,
    /// Completed in an earlier run and skipped.
    pub resumed: usize,
    pub completed: usize,
    pub failed: usize,
    /// Not attempted because of the job limit.
    pub pending: usize,
    /// Jobs with output on disk after this run.
    pub done: usize,
    pub per_language: BTreeMap<String, usize>,
    pub failures: Vec<JobFailure>,
}

fn io_err(p: &Path) -> impl Fn(std::io::Error) -> FilterError + '_ {
    move |e| FilterError::Io(format!("{}: {e}", p.display()))
}

fn read_journal(path: &Path) -> Result<HashMap<String, JobStatus>, FilterError> {
    let mut status = HashMap::new();
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(status),
        Err(e) => return Err(FilterError::Io(format!("{}: {e}", path.display()))),
    };
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| FilterError::Io(format!("{}: {e}", path.display())))?;
        // A torn final line from an interrupted write is ignored.
        if let Ok(entry) = serde_json::from_str::<JournalEntry>(&line) {
            status.insert(entry.job, entry.status);
        }
    }
    Ok(status)
}

fn translated_record(source: &CorpusRecord, lang: &str, text: String) -> CorpusRecord {
    let mut out = source.clone();
    out.id = job_id(&source.id, lang);
    out.language = lang.to_string();
    out.text = text;
    out.reward = None;
    out.provenance = Some(source.id.clone());
    out
}

/// Runs every pending job of `plan`, appending translated records to the
/// output file and completion entries to the journal. Re-running with the
/// same paths resumes: journaled jobs are skipped, and once every job is
/// done the output holds the records in plan order.
pub fn execute_translations(
    plan: &TranslationPlan,
    sources: &[CorpusRecord],
    translators: &BTreeMap<String, &dyn Translator>,
    opts: &ExecuteOptions,
) -> Result<TranslationManifest, FilterError> {
    let by_id: HashMap<&str, &CorpusRecord> = sources.iter().map(|r| (r.id.as_str(), r)).collect();
    if let Some(missing) = plan.records.iter().find(|id| !by_id.contains_key(id.as_str())) {
        return Err(FilterError::InvalidPlan(format!("record {missing} is not in the source set")));
    }
    for (lang, translator) in &plan.assignments {
        if !translators.contains_key(translator) {
            return Err(FilterError::MissingTranslator(format!("{lang} (translator {translator})")));
        }
    }

    let order: HashMap<String, usize> = plan.jobs().enumerate().map(|(i, j)| (j.id(), i)).collect();
    let journal = read_journal(&opts.journal)?;

    // Keep only output records that are in this plan and journaled as done.
    let mut existing = Vec::new();
    let mut dropped = false;
    if opts.output.exists() {
        for rec in JsonlReader::open(&opts.output)? {
            let rec = rec?;
            if order.contains_key(&rec.id) && journal.get(&rec.id) == Some(&JobStatus::Done) {
                existing.push(rec);
            } else {
                dropped = true;
            }
        }
    }
    if dropped {
        write_corpus(&opts.output, &existing)?;
    }
    let mut done: HashSet<String> = existing.iter().map(|r| r.id.clone()).collect();

    let mut manifest = TranslationManifest { planned: plan.len(), resumed: done.len(), ..Default::default() };
    let mut pending: Vec<TranslationJob<'_>> = plan.jobs().filter(|j| !done.contains(&j.id())).collect();
    if let Some(limit) = opts.max_jobs {
        manifest.pending = pending.len().saturating_sub(limit);
        pending.truncate(limit);
    }

    let mut output = OpenOptions::new().create(true).append(true).open(&opts.output).map_err(io_err(&opts.output))?;
    let mut journal_file =
        OpenOptions::new().create(true).append(true).open(&opts.journal).map_err(io_err(&opts.journal))?;

    let batch_size = opts.batch_size.max(1);
    for chunk in pending.chunks(batch_size * opts.jobs.max(1)) {
        // Group each chunk by translator, then split into bounded batches.
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, job) in chunk.iter().enumerate() {
            groups.entry(job.translator).or_default().push(i);
        }
        let batches: Vec<(&str, Vec<usize>)> = groups
            .into_iter()
            .flat_map(|(t, idx)| idx.chunks(batch_size).map(|c| (t, c.to_vec())).collect::<Vec<_>>())
            .collect();
        let batch_results = run_bounded(opts.jobs, &batches, |(translator, idx)| {
            let requests: Vec<TranslateRequest> = idx
                .iter()
                .map(|&i| TranslateRequest {
                    id: chunk[i].id(),
                    text: by_id[chunk[i].record_id].text.clone(),
                    target_lang: chunk[i].target_lang.to_string(),
                })
                .collect();
            let mut out = translators[*translator].translate_batch(&requests);
            out.resize_with(idx.len(), || Err("translator returned too few results".into()));
            out
        });
        let mut results: Vec<Option<Result<String, String>>> = vec![None; chunk.len()];
        for ((_, idx), outs) in batches.iter().zip(batch_results) {
            for (&i, r) in idx.iter().zip(outs) {
                results[i] = Some(r);
            }
        }

        // Output lines are durable before their journal entries.
        let mut entries = Vec::with_capacity(chunk.len());
        for (job, result) in chunk.iter().zip(results) {
            match result.expect("every job has a result") {
                Ok(text) => {
                    let rec = translated_record(by_id[job.record_id], job.target_lang, text);
                    writeln!(output, "{}", to_jsonl_line(&rec)).map_err(io_err(&opts.output))?;
                    entries.push(JournalEntry { job: rec.id.clone(), status: JobStatus::Done, error: None });
                    done.insert(rec.id);
                    manifest.completed += 1;
                }
                Err(message) => {
                    entries.push(JournalEntry { job: job.id(), status: JobStatus::Failed, error: Some(message.clone()) });
                    manifest.failures.push(JobFailure { job: job.id(), message });
                    manifest.failed += 1;
                }
            }
        }
        output.flush().map_err(io_err(&opts.output))?;
        output.sync_data().map_err(io_err(&opts.output))?;
        for entry in entries {
            let line = serde_json::to_string(&entry).expect("journal entry serializes");
            writeln!(journal_file, "{line}").map_err(io_err(&opts.journal))?;
        }
        journal_file.flush().map_err(io_err(&opts.journal))?;
    }
    drop(output);

    if done.len() == plan.len() {
        normalize_order(&opts.output, &order)?;
    }
    manifest.done = done.len();
    for job in plan.jobs() {
        if done.contains(&job.id()) {
            *manifest.per_language.entry(job.target_lang.to_string()).or_default() += 1;
        }
    }
    Ok(manifest)
}

fn normalize_order(path: &Path, order: &HashMap<String, usize>) -> Result<(), FilterError> {
    let records: Vec<CorpusRecord> = JsonlReader::open(path)?.collect::<Result<_, _>>()?;
    let sorted = records.windows(2).all(|w| order[&w[0].id] < order[&w[1].id]);
    if !sorted {
        let mut records = records;
        records.sort_by_key(|r| order[&r.id]);
        write_corpus(path, &records)?;
    }
    Ok(())
}
