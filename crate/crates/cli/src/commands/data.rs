use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::Args;
use ggez_core::filter::{
    build_sft_mix, execute_translations, plan_translations, read_corpus, score_rewards, sea_translator_assignments,
    to_jsonl_line, write_corpus, CommandScorer, CommandSpec, CommandTranslator, ExecuteOptions, FilterConfig,
    JsonlReader, MixSource, Proportion, QualityFilter, ScoreOptions, ScoringFailure, Translator,
};
use ggez_core::io::AtomicFile;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{to_json, Outcome};
use crate::config::{Common, Problems};
use crate::error::CliError;

const CHUNK: usize = 4096;

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterArgs {
    /// Corpus JSONL
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Filtered JSONL
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Keep records with reward >= tau (default 3.0)
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    /// Region to keep (default: target region)
    #[arg(long)]
    pub region: Option<String>,
    /// Scorer command speaking the JSONL protocol; omit if records are already scored
    #[arg(long)]
    pub scorer: Option<String>,
    /// Re-score records that already carry a reward
    #[arg(long)]
    pub rescore: bool,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Tolerated fraction of records whose scoring fails (default 0)
    #[arg(long)]
    pub max_failure_rate: Option<f64>,
    /// Also write every scored record here
    #[arg(long)]
    pub scored: Option<PathBuf>,
}

fn io_err(path: &std::path::Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::data(format!("{}: {e}", path.display()))
}

pub fn filter(common: &Common, args: FilterArgs) -> Result<Outcome, CliError> {
    let mut problems = Problems::default();
    problems.input(&args.input, "input");
    problems.require(&args.output, "output");
    let partition = problems.check(common.partition());
    let region = args.region.clone().or_else(|| partition.as_ref().map(|p| p.target().to_string()));
    let tau = args.tau.unwrap_or(3.0);
    let cfg = match (&partition, &region) {
        (Some(p), Some(r)) => problems.check(FilterConfig::new(r.clone(), tau, p).map_err(CliError::from)),
        _ => None,
    };
    let scorer = match &args.scorer {
        Some(cmd) => match CommandSpec::parse(cmd) {
            Some(command) => Some(CommandScorer { command }),
            None => {
                problems.push("--scorer is empty");
                None
            }
        },
        None => None,
    };
    let max_failure_rate = args.max_failure_rate.unwrap_or(0.0);
    if !(0.0..=1.0).contains(&max_failure_rate) {
        problems.push(format!("--max-failure-rate {max_failure_rate} is outside [0, 1]"));
    }
    if args.batch_size == Some(0) {
        problems.push("--batch-size must be at least 1");
    }
    problems.finish()?;
    let (partition, cfg) = (partition.unwrap(), cfg.unwrap());
    let (input, output) = (args.input.unwrap(), args.output.unwrap());

    if common.dry_run {
        // Parse the whole corpus so malformed input surfaces now.
        let mut records = 0;
        for r in JsonlReader::open(&input)? {
            r?;
            records += 1;
        }
        let summary = json!({ "input": input, "records": records, "region": cfg.target_region, "tau": tau });
        return Ok(Outcome::ok(summary, format!("filter plan validated: {records} records\n")));
    }

    let opts = ScoreOptions {
        rescore: args.rescore,
        batch_size: args.batch_size.unwrap_or(64),
        jobs: common.jobs(),
        max_failure_rate: 1.0,
    };
    let mut kept_out = AtomicFile::create(&output).map_err(io_err(&output))?;
    let mut scored_out = match &args.scored {
        Some(p) => Some((AtomicFile::create(p).map_err(io_err(p))?, p)),
        None => None,
    };
    let mut filter = QualityFilter::new(&cfg, &partition);
    let (mut scored, mut reused, mut pending) = (0, 0, 0);
    let mut failures: Vec<ScoringFailure> = Vec::new();
    let mut reader = JsonlReader::open(&input)?;
    loop {
        let chunk: Vec<_> = reader.by_ref().take(CHUNK).collect::<Result<_, _>>()?;
        if chunk.is_empty() {
            break;
        }
        let records = match &scorer {
            Some(s) => {
                let outcome = score_rewards(chunk, s, &opts)?;
                scored += outcome.scored;
                reused += outcome.reused;
                pending += outcome.scored + outcome.failures.len();
                failures.extend(outcome.failures);
                outcome.records
            }
            None => chunk,
        };
        for record in &records {
            if let Some((file, path)) = scored_out.as_mut() {
                writeln!(file, "{}", to_jsonl_line(record)).map_err(io_err(path))?;
            }
            if filter.admit(record)? {
                writeln!(kept_out, "{}", to_jsonl_line(record)).map_err(io_err(&output))?;
            }
        }
    }
    if failures.len() as f64 > max_failure_rate * pending as f64 {
        let first = failures.first().map(|f| format!("{}: {}", f.id, f.message)).unwrap_or_default();
        return Err(CliError::external(format!(
            "scoring failed for {} of {pending} records (first: {first})",
            failures.len()
        )));
    }
    kept_out.commit().map_err(io_err(&output))?;
    if let Some((file, path)) = scored_out {
        file.commit().map_err(io_err(path))?;
    }
    let summary = filter.into_summary();
    let report = format!(
        "filter {} -> {}\nregion {} tau {tau}\ninput {}, kept {}, out of region {}, below threshold {}, scoring failures {}\n",
        input.display(),
        output.display(),
        cfg.target_region,
        summary.input,
        summary.kept,
        summary.out_of_region,
        summary.below_threshold,
        failures.len()
    );
    let result = json!({
        "output": output,
        "region": cfg.target_region,
        "tau": tau,
        "summary": to_json(&summary),
        "scored": scored,
        "reused_rewards": reused,
        "scoring_failures": to_json(&failures),
    });
    Ok(Outcome::ok(result, report))
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TranslateArgs {
    /// Source records (JSONL)
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Completion journal (default: <output>.journal)
    #[arg(long)]
    pub journal: Option<PathBuf>,
    /// Target languages, comma separated
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<String>,
    #[arg(long)]
    pub source_language: Option<String>,
    /// `id=command` for each translator (repeatable)
    #[arg(long = "translator")]
    pub translators: Vec<String>,
    /// `lang=translator-id` routing overrides (default: the SEA routing)
    #[arg(long = "assign")]
    pub assignments: Vec<String>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Stop after this many jobs; rerun to resume
    #[arg(long)]
    pub max_jobs: Option<usize>,
}

fn split_pair<'a>(text: &'a str, flag: &str, problems: &mut Problems) -> Option<(&'a str, &'a str)> {
    match text.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => Some((k.trim(), v.trim())),
        _ => {
            problems.push(format!("--{flag} {text:?} is not of the form key=value"));
            None
        }
    }
}

pub fn translate(common: &Common, args: TranslateArgs) -> Result<Outcome, CliError> {
    let mut problems = Problems::default();
    problems.input(&args.input, "input");
    problems.require(&args.output, "output");
    if args.targets.is_empty() {
        problems.push("--targets is required");
    }
    let mut assignments = sea_translator_assignments();
    for a in &args.assignments {
        if let Some((lang, id)) = split_pair(a, "assign", &mut problems) {
            assignments.insert(lang.to_string(), id.to_string());
        }
    }
    let mut commands: BTreeMap<String, CommandTranslator> = BTreeMap::new();
    for t in &args.translators {
        if let Some((id, cmd)) = split_pair(t, "translator", &mut problems) {
            match CommandSpec::parse(cmd) {
                Some(command) => {
                    commands.insert(id.to_string(), CommandTranslator { command });
                }
                None => problems.push(format!("--translator {id}: empty command")),
            }
        }
    }
    for lang in &args.targets {
        match assignments.get(lang) {
            None => problems.push(format!("no translator assigned for target language {lang}")),
            Some(id) if !commands.contains_key(id) => {
                problems.push(format!("target {lang} routes to translator {id}, which has no --translator command"))
            }
            Some(_) => {}
        }
    }
    if args.batch_size == Some(0) {
        problems.push("--batch-size must be at least 1");
    }
    problems.finish()?;
    let input = args.input.unwrap();
    let output = args.output.unwrap();
    let journal = args.journal.unwrap_or_else(|| {
        let mut name = output.clone().into_os_string();
        name.push(".journal");
        PathBuf::from(name)
    });
    let source_language = args.source_language.unwrap_or_else(|| "eng".into());

    let sources = read_corpus(&input)?;
    let plan = plan_translations(&sources, &source_language, &args.targets, &assignments)?;
    if common.dry_run {
        let summary = json!({ "jobs": plan.len(), "records": plan.records.len(), "assignments": plan.assignments });
        return Ok(Outcome::ok(summary, format!("translation plan: {} jobs\n", plan.len())));
    }
    let translators: BTreeMap<String, &dyn Translator> =
        commands.iter().map(|(id, t)| (id.clone(), t as &dyn Translator)).collect();
    let opts = ExecuteOptions {
        output: output.clone(),
        journal: journal.clone(),
        batch_size: args.batch_size.unwrap_or(16),
        jobs: common.jobs(),
        max_jobs: args.max_jobs,
    };
    let manifest = execute_translations(&plan, &sources, &translators, &opts)?;
    let mut report = format!(
        "translations {}: planned {}, done {} ({} resumed, {} new), failed {}, pending {}\n",
        output.display(),
        manifest.planned,
        manifest.done,
        manifest.resumed,
        manifest.completed,
        manifest.failed,
        manifest.pending
    );
    for (lang, n) in &manifest.per_language {
        let _ = writeln!(report, "  {lang}: {n}");
    }
    let failure = (manifest.failed > 0).then(|| {
        CliError::external(format!("{} translation jobs failed; rerun to retry them", manifest.failed))
    });
    let summary = json!({ "output": output, "journal": journal, "manifest": to_json(&manifest) });
    Ok(Outcome { summary, report, failure })
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixArgs {
    /// `name=path:proportion` (repeatable); proportion is 0.3, 30% or #500
    #[arg(long = "source")]
    pub sources: Vec<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the mix manifest JSON here
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Allow drawing more records than a pool holds
    #[arg(long)]
    pub with_replacement: bool,
}

pub fn mix(common: &Common, args: MixArgs) -> Result<Outcome, CliError> {
    let mut problems = Problems::default();
    problems.require(&args.output, "output");
    if args.sources.is_empty() {
        problems.push("at least one --source is required");
    }
    let mut specs = Vec::new();
    for s in &args.sources {
        let Some((name, rest)) = split_pair(s, "source", &mut problems) else { continue };
        let Some((path, prop)) = rest.rsplit_once(':') else {
            problems.push(format!("--source {s:?} is not of the form name=path:proportion"));
            continue;
        };
        let path = PathBuf::from(path);
        problems.input(&Some(path.clone()), "source");
        match prop.parse::<Proportion>() {
            Ok(p) => specs.push((name.to_string(), path, p)),
            Err(e) => problems.push(format!("--source {name}: {e}")),
        }
    }
    problems.finish()?;
    let output = args.output.unwrap();

    let mut sources = Vec::with_capacity(specs.len());
    for (name, path, proportion) in specs {
        sources.push(MixSource { name, records: read_corpus(&path)?, proportion });
    }
    let (records, manifest) = build_sft_mix(&sources, common.seed(), args.with_replacement)?;
    if !common.dry_run {
        write_corpus(&output, &records)?;
        if let Some(p) = &args.manifest {
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
            super::write_text(p, &text)?;
        }
    }
    let mut report = format!("mix {} records into {} (seed {})\n", manifest.total, output.display(), manifest.seed);
    for (name, c) in &manifest.sources {
        let _ = writeln!(report, "  {name}: {} of {} requested from a pool of {}", c.selected, c.requested, c.pool);
    }
    Ok(Outcome::ok(json!({ "output": output, "manifest": to_json(&manifest) }), report))
}
