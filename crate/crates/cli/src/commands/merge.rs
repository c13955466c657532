use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use clap::Args;
use ggez_core::eval::{build_breakdown, read_metric_rows};
use ggez_core::filter::CommandSpec;
use ggez_core::merge::{
    load_checkpoint, merge_linear, save_checkpoint, sweep_beta, validate_grid, CommandEvaluator, Evaluation,
    Evaluator, LookupEvaluator, SweepOutcome, SweepSources,
};
use ggez_core::Scalar;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{to_json, write_text, Outcome};
use crate::config::{Common, Problems};
use crate::error::CliError;

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MergeArgs {
    /// Base (global) checkpoint
    #[arg(long)]
    pub global: Option<PathBuf>,
    /// Regionally fine-tuned checkpoint
    #[arg(long)]
    pub regional: Option<PathBuf>,
    /// Weight on the regional checkpoint, in [0, 1]
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn check_beta(problems: &mut Problems, beta: Option<f64>) {
    match beta {
        None => problems.require(&beta, "beta"),
        Some(b) if !(0.0..=1.0).contains(&b) => problems.push(format!("--beta {b} is outside [0, 1]")),
        Some(_) => {}
    }
}

pub fn merge(common: &Common, args: MergeArgs) -> Result<Outcome, CliError> {
    let mut problems = Problems::default();
    problems.input(&args.global, "global");
    problems.input(&args.regional, "regional");
    check_beta(&mut problems, args.beta);
    problems.require(&args.out, "out");
    problems.finish()?;
    let (global_path, regional_path, out) = (args.global.unwrap(), args.regional.unwrap(), args.out.unwrap());

    let global = load_checkpoint(&global_path)?;
    let regional = load_checkpoint(&regional_path)?;
    let (merged, report) = merge_linear(&global, &regional, args.beta.unwrap())?;
    if !common.dry_run {
        save_checkpoint(&merged, &out)?;
    }
    let text = format!(
        "merged {} tensors at beta = {} into {}\nfrozen: {}, passthrough: {}, max |delta| vs global: {}\n",
        report.tensor_count,
        report.beta,
        out.display(),
        report.frozen_tensors,
        report.passthrough_tensors.len(),
        report.max_abs_delta
    );
    let summary = json!({ "out": out, "report": to_json(&report) });
    Ok(Outcome::ok(summary, text))
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    /// Candidate weights, comma separated
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    /// Precomputed metrics: `beta,q_global,q_regional` CSV, or metric rows with a beta column
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    /// Evaluator command; receives each merged checkpoint path as its last argument
    #[arg(long)]
    pub evaluator: Option<String>,
    #[arg(long)]
    pub global: Option<PathBuf>,
    #[arg(long)]
    pub regional: Option<PathBuf>,
    /// Directory for merged checkpoints (evaluator mode)
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Write `beta,grp,q_global,q_regional` plot data here
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Write the sweep results as metric rows for `report`
    #[arg(long)]
    pub rows_out: Option<PathBuf>,
}

/// Builds a lookup evaluator from either CSV flavour.
fn lookup_from_file(path: &Path, common: &Common) -> Result<LookupEvaluator, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut header = String::new();
    BufReader::new(file).read_line(&mut header).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let columns: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    if columns.contains(&"q_global") {
        let file = std::fs::File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        return Ok(LookupEvaluator::from_csv_reader(file)?);
    }
    let rows = read_metric_rows::<f64>(path)?;
    let breakdown = build_breakdown(&rows, &common.partition()?, &common.grp_config(1)?)?;
    let mut entries: Vec<(f64, Evaluation)> = Vec::new();
    for m in &breakdown.models {
        let Some(beta) = m.beta else { continue };
        if entries.iter().any(|(b, _)| *b == beta) {
            return Err(CliError::data(format!("{}: two models share beta = {beta}", path.display())));
        }
        entries.push((beta, Evaluation { q_global: m.q_global, q_regional: m.q_regional }));
    }
    Ok(LookupEvaluator::new(entries))
}

pub fn sweep(common: &Common, args: SweepArgs) -> Result<Outcome, CliError> {
    let mut problems = Problems::default();
    if args.grid.is_empty() {
        problems.push("--grid is required");
    } else if let Err(e) = validate_grid(&args.grid) {
        problems.push(e.to_string());
    }
    let cfg = problems.check(common.grp_config(1));
    match (&args.metrics, &args.evaluator) {
        (Some(_), None) => problems.input(&args.metrics, "metrics"),
        (None, Some(cmd)) => {
            if CommandSpec::parse(cmd).is_none() {
                problems.push("--evaluator is empty");
            }
            problems.input(&args.global, "global");
            problems.input(&args.regional, "regional");
            problems.require(&args.out_dir, "out-dir");
        }
        _ => problems.push("give exactly one of --metrics or --evaluator"),
    }
    problems.finish()?;
    let cfg = cfg.expect("validated");

    let outcome: SweepOutcome = if let Some(path) = &args.metrics {
        let lookup = lookup_from_file(path, common)?;
        sweep_beta(None, &args.grid, &lookup, &cfg)?
    } else {
        let spec = CommandSpec::parse(args.evaluator.as_deref().unwrap()).expect("validated");
        let evaluator = CommandEvaluator::new(spec.program, spec.args);
        let global = load_checkpoint(args.global.as_ref().unwrap())?;
        let regional = load_checkpoint(args.regional.as_ref().unwrap())?;
        if common.dry_run {
            merge_linear(&global, &regional, 0.5)?;
            let summary = json!({ "grid": args.grid, "evaluator": args.evaluator, "tensors": global.len() });
            return Ok(Outcome::ok(summary, "sweep plan validated\n"));
        }
        let out_dir = args.out_dir.as_ref().unwrap();
        std::fs::create_dir_all(out_dir).map_err(|e| CliError::data(format!("{}: {e}", out_dir.display())))?;
        let sources = SweepSources { global: &global, regional: &regional, out_dir };
        sweep_beta(Some(sources), &args.grid, &evaluator as &dyn Evaluator, &cfg)?
    };

    let mut report = format!("alpha = {}\n{:>8}  {:>10}  {:>10}  {:>10}\n", cfg.alpha(), "beta", "Q_global", "Q_regional", "GRP");
    let mut plot = String::from("beta,grp,q_global,q_regional\n");
    let mut rows_csv = String::from("model,benchmark,scope,value,beta\n");
    for r in &outcome.rows {
        let mark = if r.beta == outcome.beta_star { " *" } else { "" };
        let _ = writeln!(report, "{:>8}  {:>10}  {:>10}  {:>10}{mark}", r.beta, r.q_global, r.q_regional, cfg.round(r.grp));
        let _ = writeln!(plot, "{},{},{},{}", r.beta, r.grp, r.q_global, r.q_regional);
        let model = format!("beta={}", r.beta);
        let _ = writeln!(rows_csv, "{model},evaluator,global,{},{}", r.q_global, r.beta);
        let _ = writeln!(rows_csv, "{model},evaluator,regional,{},{}", r.q_regional, r.beta);
    }
    let _ = writeln!(report, "beta* = {} (GRP {})", outcome.beta_star, cfg.round(outcome.grp_star));
    if !common.dry_run {
        if let Some(p) = &args.plot {
            write_text(p, &plot)?;
        }
        if let Some(p) = &args.rows_out {
            write_text(p, &rows_csv)?;
        }
    }
    let summary = json!({
        "alpha": cfg.alpha().as_f64(),
        "beta_star": outcome.beta_star,
        "grp_star": outcome.grp_star,
        "grp_star_rounded": cfg.round(outcome.grp_star),
        "rows": to_json(&outcome.rows),
    });
    Ok(Outcome::ok(summary, report))
}
