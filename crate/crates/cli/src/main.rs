//! `ggez`: regional adaptation pipeline from the command line.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use commands::{data, eval, merge, parity, write_text, Outcome};
use config::{Common, ConfigFile};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "ggez", version, about = "Global-regional parity toolkit: filtering, merging, sweeps and reports")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive the globalization factor from the index table
    Alpha(parity::AlphaArgs),
    /// Compute GRP from two quality scores or a metrics file
    Grp(parity::GrpArgs),
    /// Linearly interpolate two checkpoints
    Merge(merge::MergeArgs),
    /// Evaluate a grid of merge weights and select the best by GRP
    Sweep(merge::SweepArgs),
    /// Score and filter a corpus by region and reward threshold
    Filter(data::FilterArgs),
    /// Translate records into target languages, resumably
    Translate(data::TranslateArgs),
    /// Sample the fine-tuning mix from record pools
    Mix(data::MixArgs),
    /// Pairwise agreement of reward models with human scores
    Agree(eval::AgreeArgs),
    /// Average rank of models over human-scored items
    Rank(eval::RankArgs),
    /// Global/regional breakdown with GRP per model
    Report(eval::ReportArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Alpha(_) => "alpha",
            Command::Grp(_) => "grp",
            Command::Merge(_) => "merge",
            Command::Sweep(_) => "sweep",
            Command::Filter(_) => "filter",
            Command::Translate(_) => "translate",
            Command::Mix(_) => "mix",
            Command::Agree(_) => "agree",
            Command::Rank(_) => "rank",
            Command::Report(_) => "report",
        }
    }
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let file = match &cli.common.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let common = file.common(&cli.common)?;
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(common.jobs()).build_global() {
        return Err(CliError::config(format!("cannot size the worker pool: {e}")));
    }
    let name = cli.command.name();
    match cli.command {
        Command::Alpha(a) => parity::alpha(&common, file.section(name, &a)?),
        Command::Grp(a) => parity::grp(&common, file.section(name, &a)?),
        Command::Merge(a) => merge::merge(&common, file.section(name, &a)?),
        Command::Sweep(a) => merge::sweep(&common, file.section(name, &a)?),
        Command::Filter(a) => data::filter(&common, file.section(name, &a)?),
        Command::Translate(a) => data::translate(&common, file.section(name, &a)?),
        Command::Mix(a) => data::mix(&common, file.section(name, &a)?),
        Command::Agree(a) => eval::agree(&common, file.section(name, &a)?),
        Command::Rank(a) => eval::rank(&common, file.section(name, &a)?),
        Command::Report(a) => eval::report(&common, file.section(name, &a)?),
    }
}

fn print_json(value: &Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();
    let dry_run = cli.common.dry_run;
    let report_path = cli.common.report.clone();

    let failure = match run(cli) {
        Ok(outcome) => {
            let status = if outcome.failure.is_some() { "partial" } else { "ok" };
            print_json(&json!({
                "command": command,
                "status": status,
                "dry_run": dry_run,
                "result": outcome.summary,
            }));
            let written = match (&report_path, dry_run) {
                (Some(path), false) => write_text(path, &outcome.report),
                _ => Ok(()),
            };
            outcome.failure.or(written.err())
        }
        Err(e) => {
            print_json(&json!({ "command": command, "status": "error", "error": e }));
            Some(e)
        }
    };
    match failure {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("ggez {command}: {e}");
            ExitCode::from(e.category.exit_code() as u8)
        }
    }
}
