use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use ggez_core::eval::{
    average_rank, build_breakdown, minmax_normalize, pairwise_agreement, read_human_scores, read_metric_rows,
    HumanItemScores, PairCount,
};
use ggez_core::parity::compute_grp;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{to_json, write_text, Outcome};
use crate::config::{Common, Problems};
use crate::error::CliError;

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgreeArgs {
    /// Human scores JSONL: one item per line, `scores` keyed by category
    #[arg(long)]
    pub human: Option<PathBuf>,
    /// Reward-model scores JSONL: `scores` keyed by reward-model id
    #[arg(long)]
    pub rm: Option<PathBuf>,
    /// Number of sampled pairs (default 500)
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Use every qualifying pair once instead of sampling
    #[arg(long)]
    pub all_pairs: bool,
    /// Sample pairs without replacement
    #[arg(long)]
    pub distinct_pairs: bool,
}

fn score_columns(items: &[HumanItemScores]) -> Vec<String> {
    items.first().map(|i| i.scores.keys().cloned().collect()).unwrap_or_default()
}

fn column(items: &[HumanItemScores], key: &str) -> Result<Vec<f64>, CliError> {
    items
        .iter()
        .map(|i| {
            i.scores.get(key).copied().ok_or_else(|| CliError::data(format!("item {} has no score for {key}", i.item)))
        })
        .collect()
}

pub fn agree(common: &Common, args: AgreeArgs) -> Result<Outcome, CliError> {
    let mut problems = Problems::default();
    problems.input(&args.human, "human");
    problems.input(&args.rm, "rm");
    if args.pairs == Some(0) {
        problems.push("--pairs must be at least 1");
    }
    if args.all_pairs && (args.pairs.is_some() || args.distinct_pairs) {
        problems.push("--all-pairs cannot be combined with --pairs or --distinct-pairs");
    }
    problems.finish()?;
    let human = read_human_scores(args.human.as_ref().unwrap())?;
    let rm = read_human_scores(args.rm.as_ref().unwrap())?;

    // Human categories are min-max normalized and averaged per item.
    let categories = score_columns(&human);
    let table = categories.iter().map(|c| column(&human, c)).collect::<Result<Vec<_>, _>>()?;
    let human_scores = minmax_normalize(&table)?;

    let rm_index: HashMap<&str, &HumanItemScores> = rm.iter().map(|i| (i.item.as_str(), i)).collect();
    let aligned: Vec<HumanItemScores> = human
        .iter()
        .map(|h| {
            rm_index
                .get(h.item.as_str())
                .map(|r| (*r).clone())
                .ok_or_else(|| CliError::data(format!("item {} has no reward-model scores", h.item)))
        })
        .collect::<Result<_, _>>()?;
    let pairs = if args.all_pairs { PairCount::All } else { PairCount::Sample(args.pairs.unwrap_or(500)) };
    let mut reports = Vec::new();
    for model in score_columns(&aligned) {
        let scores = column(&aligned, &model)?;
        reports.push(pairwise_agreement(&model, &human_scores, &scores, pairs, common.seed(), args.distinct_pairs)?);
    }
    let mut text = format!("{} items, human categories: {}\n", human.len(), categories.join(", "));
    for r in &reports {
        let _ = writeln!(text, "{:<24} {:.3} ({} of {} pairs)", r.reward_model, r.rate, r.agreeing, r.pair_count);
    }
    Ok(Outcome::ok(json!({ "items": human.len(), "reports": to_json(&reports) }), text))
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankArgs {
    /// Human scores JSONL: `scores` keyed by model id, optional `language`
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Models to rank, comma separated (default: those of the first item)
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    /// Inclusive score range, e.g. `1,3`
    #[arg(long, value_delimiter = ',')]
    pub scale: Vec<f64>,
    /// Language treated as the global domain; the others form the regional side of GRP
    #[arg(long)]
    pub global_language: Option<String>,
}

pub fn rank(common: &Common, args: RankArgs) -> Result<Outcome, CliError> {
    let mut problems = Problems::default();
    problems.input(&args.scores, "scores");
    let scale = match args.scale.as_slice() {
        [] => None,
        &[lo, hi] if lo < hi => Some((lo, hi)),
        _ => {
            problems.push("--scale takes two increasing numbers, e.g. 1,3");
            None
        }
    };
    let cfg = problems.check(common.grp_config(2));
    problems.finish()?;
    let cfg = cfg.unwrap();
    let items = read_human_scores(args.scores.as_ref().unwrap())?;
    let models = if args.models.is_empty() { score_columns(&items) } else { args.models.clone() };
    let report = average_rank(&items, &models, scale)?;

    let mut text = format!("average rank over {} items (higher is better)\n", report.items);
    for (m, r) in report.models.iter().zip(&report.overall) {
        let _ = writeln!(text, "  {m:<24} {r:.2}");
    }
    let mut grp = serde_json::Map::new();
    if let Some(global) = &args.global_language {
        let Some(global_ranks) = report.by_language.get(global) else {
            return Err(CliError::data(format!("no items in global language {global}")));
        };
        let regional: Vec<&Vec<f64>> =
            report.by_language.iter().filter(|(l, _)| *l != global).map(|(_, r)| r).collect();
        if regional.is_empty() {
            return Err(CliError::data("no items outside the global language"));
        }
        let _ = writeln!(text, "GRP with {global} as global (alpha {}):", cfg.alpha());
        for (i, m) in report.models.iter().enumerate() {
            let q_regional = regional.iter().map(|r| r[i]).sum::<f64>() / regional.len() as f64;
            let value = compute_grp(&global_ranks[i], &q_regional, &cfg)?;
            let _ = writeln!(text, "  {m:<24} {:.2}", cfg.round(value));
            grp.insert(m.clone(), json!({ "global": global_ranks[i], "regional": q_regional, "grp": value }));
        }
    }
    Ok(Outcome::ok(json!({ "ranks": to_json(&report), "grp": grp }), text))
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportArgs {
    /// Metric row files (CSV or JSONL), comma separated
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<PathBuf>,
    /// Directory for report.txt, breakdown.csv, breakdown.json and grp_vs_beta.csv
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

pub fn report(common: &Common, args: ReportArgs) -> Result<Outcome, CliError> {
    let mut problems = Problems::default();
    if args.metrics.is_empty() {
        problems.push("--metrics is required");
    }
    for m in &args.metrics {
        problems.input(&Some(m.clone()), "metrics");
    }
    problems.require(&args.out_dir, "out-dir");
    let cfg = problems.check(common.grp_config(1));
    let partition = problems.check(common.partition());
    problems.finish()?;
    let (cfg, partition, out_dir) = (cfg.unwrap(), partition.unwrap(), args.out_dir.unwrap());

    let mut rows = Vec::new();
    for m in &args.metrics {
        rows.extend(read_metric_rows::<f64>(m)?);
    }
    let breakdown = build_breakdown(&rows, &partition, &cfg)?;
    let text = breakdown.to_text();
    let files = ["report.txt", "breakdown.csv", "breakdown.json", "grp_vs_beta.csv"].map(|f| out_dir.join(f));
    if !common.dry_run {
        std::fs::create_dir_all(&out_dir).map_err(|e| CliError::data(format!("{}: {e}", out_dir.display())))?;
        let json = serde_json::to_string_pretty(&breakdown.to_json()).expect("json") + "\n";
        for (path, body) in files.iter().zip([&text, &breakdown.to_csv(), &json, &breakdown.plot_csv()]) {
            write_text(path, body)?;
        }
    }
    let summary = json!({ "files": files, "breakdown": breakdown.to_json() });
    Ok(Outcome::ok(summary, text))
}
