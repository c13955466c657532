use std::path::PathBuf;

use clap::Args;
use ggez_core::eval::{build_breakdown, read_metric_rows};
use ggez_core::parity::{compute_grp, derive_alpha};
use ggez_core::scalar::round_to;
use ggez_core::{Exact, Scalar};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::Outcome;
use crate::config::{Common, Problems};
use crate::error::CliError;

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaArgs {
    /// Row of the globalization table (default: target region, else SEA)
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long)]
    pub year: Option<u16>,
}

pub fn alpha(common: &Common, args: AlphaArgs) -> Result<Outcome, CliError> {
    let mut problems = Problems::default();
    if let Some(p) = &common.kof {
        if !p.is_file() {
            problems.push(format!("--kof: {} does not exist", p.display()));
        }
    }
    problems.finish()?;
    let region = args.region.or_else(|| common.kof_region.clone()).or_else(|| common.target.clone());
    let region = region.unwrap_or_else(|| "SEA".into());
    let year = args.year.or(common.kof_year).unwrap_or(2023);
    let table = common.kof_table()?;
    let alpha: Exact = derive_alpha(&table, &region, year)?;
    let places = common.rounding.unwrap_or(2);
    let rounded = round_to(alpha.as_f64(), places);
    let summary = json!({
        "region": region,
        "year": year,
        "index": (alpha * Exact::from_integer(100)).as_f64(),
        "alpha": alpha.as_f64(),
        "alpha_exact": alpha.to_string(),
        "alpha_rounded": rounded,
    });
    let report = format!("alpha({region}, {year}) = {} (rounded {rounded})\n", alpha.as_f64());
    Ok(Outcome::ok(summary, report))
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrpArgs {
    /// Global quality score
    #[arg(long)]
    pub q_global: Option<f64>,
    /// Target-region quality score
    #[arg(long)]
    pub q_regional: Option<f64>,
    /// Metric rows (CSV or JSONL) to break down per model instead
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

pub fn grp(common: &Common, args: GrpArgs) -> Result<Outcome, CliError> {
    let mut problems = Problems::default();
    let cfg = problems.check(common.grp_config_exact(1));
    match (&args.metrics, args.q_global, args.q_regional) {
        (Some(_), None, None) => problems.input(&args.metrics, "metrics"),
        (None, Some(_), Some(_)) => {}
        _ => problems.push("give either --q-global and --q-regional, or --metrics"),
    }
    problems.finish()?;
    let cfg = cfg.expect("validated");

    if let Some(path) = &args.metrics {
        let rows = read_metric_rows::<f64>(path)?;
        let cfg64 = common.grp_config(1)?;
        let breakdown = build_breakdown(&rows, &common.partition()?, &cfg64)?;
        return Ok(Outcome::ok(breakdown.to_json(), breakdown.to_text()));
    }
    let exact = |v: f64, flag: &str| {
        Exact::parse_decimal(&v.to_string()).ok_or_else(|| CliError::config(format!("--{flag} {v} is not a plain decimal")))
    };
    let qg = exact(args.q_global.expect("validated"), "q-global")?;
    let qr = exact(args.q_regional.expect("validated"), "q-regional")?;
    let grp = compute_grp(&qg, &qr, &cfg)?;
    let rounded = cfg.round(grp.as_f64());
    let summary = json!({
        "alpha": cfg.alpha().as_f64(),
        "q_global": qg.as_f64(),
        "q_regional": qr.as_f64(),
        "grp": grp.as_f64(),
        "grp_rounded": rounded,
    });
    Ok(Outcome::ok(summary, format!("GRP = {rounded} (alpha {})\n", cfg.alpha().as_f64())))
}
