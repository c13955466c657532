//! Run configuration: a TOML file whose top-level keys mirror the global
//! flags and whose tables (`[filter]`, `[sweep]`, ...) mirror each
//! subcommand's flags. Flags given on the command line win.

use std::path::{Path, PathBuf};

use clap::Args;
use ggez_core::parity::{derive_alpha, GlobalizationTable, GrpConfig, RegionPartition};
use ggez_core::{Exact, Scalar};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Category, CliError};

pub const SECTIONS: [&str; 10] =
    ["alpha", "grp", "merge", "sweep", "filter", "translate", "mix", "agree", "rank", "report"];

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Common {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Validate everything and print the plan without writing outputs
    #[arg(long, global = true)]
    #[serde(skip)]
    pub dry_run: bool,
    /// Also write a human-readable report to this file
    #[arg(long, global = true)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
    /// Bound on internal parallelism
    #[arg(long, global = true, env = "GGEZ_JOBS")]
    pub jobs: Option<usize>,
    /// Top-level seed; every stage derives its own from it
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Region partition TOML (default: bundled)
    #[arg(long, global = true)]
    pub partition: Option<PathBuf>,
    /// Target region id (default: the partition's target)
    #[arg(long, global = true)]
    pub target: Option<String>,
    /// Fixed globalization factor, the weight on global quality
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Globalization index CSV to derive alpha from (default: bundled)
    #[arg(long, global = true)]
    pub kof: Option<PathBuf>,
    #[arg(long, global = true)]
    pub kof_region: Option<String>,
    #[arg(long, global = true)]
    pub kof_year: Option<u16>,
    /// Decimal places for reported GRP values
    #[arg(long, global = true)]
    pub rounding: Option<u32>,
}

impl Common {
    pub fn jobs(&self) -> usize {
        self.jobs.unwrap_or(1).max(1)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn partition(&self) -> Result<RegionPartition, CliError> {
        let base = match &self.partition {
            Some(path) => RegionPartition::from_toml_file(path)?,
            None => RegionPartition::bundled(),
        };
        match &self.target {
            Some(t) => Ok(base.with_target(t)?),
            None => Ok(base),
        }
    }

    pub fn kof_table(&self) -> Result<GlobalizationTable<Exact>, CliError> {
        match &self.kof {
            Some(path) => Ok(GlobalizationTable::from_csv_file(path)?),
            None => Ok(GlobalizationTable::bundled()),
        }
    }

    /// Exact alpha: the fixed value if given, else derived from the index
    /// (rounded to two decimals) when any index option is set, else 0.43.
    pub fn alpha(&self) -> Result<(Exact, String), CliError> {
        if let Some(a) = self.alpha {
            let exact = Exact::parse_decimal(&a.to_string())
                .ok_or_else(|| CliError::config(format!("alpha {a} is not a plain decimal")))?;
            return Ok((exact, "fixed".into()));
        }
        if self.kof.is_some() || self.kof_region.is_some() || self.kof_year.is_some() {
            let region = self.kof_region.clone().or_else(|| self.target.clone()).unwrap_or_else(|| "SEA".into());
            let year = self.kof_year.unwrap_or(2023);
            let raw = derive_alpha(&self.kof_table()?, &region, year)?;
            let rounded = (raw * Exact::from_integer(100)).round() / Exact::from_integer(100);
            return Ok((rounded, format!("globalization index {region} {year}")));
        }
        Ok((Exact::parse_decimal("0.43").expect("literal"), "default".into()))
    }

    pub fn grp_config_exact(&self, default_rounding: u32) -> Result<GrpConfig<Exact>, CliError> {
        Ok(GrpConfig::new(self.alpha()?.0, self.rounding.unwrap_or(default_rounding))?)
    }

    pub fn grp_config(&self, default_rounding: u32) -> Result<GrpConfig<f64>, CliError> {
        Ok(GrpConfig::new(self.alpha()?.0.as_f64(), self.rounding.unwrap_or(default_rounding))?)
    }
}

/// Parsed config file split into top-level keys and per-command tables.
#[derive(Debug, Default)]
pub struct ConfigFile {
    top: toml::Table,
    sections: toml::Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let mut top: toml::Table =
            text.parse().map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        let mut sections = toml::Table::new();
        // `alpha` is both a global key and a command name; only tables are sections.
        for name in SECTIONS {
            if top.get(name).is_some_and(toml::Value::is_table) {
                sections.insert(name.to_string(), top.remove(name).expect("present"));
            }
        }
        Ok(Self { top, sections })
    }

    pub fn common(&self, flags: &Common) -> Result<Common, CliError> {
        let mut merged: Common = layer(flags, Some(&toml::Value::Table(self.top.clone())), "config")?;
        merged.config = flags.config.clone();
        merged.dry_run = flags.dry_run;
        merged.report = flags.report.clone();
        Ok(merged)
    }

    pub fn section<T: Serialize + DeserializeOwned>(&self, name: &str, flags: &T) -> Result<T, CliError> {
        layer(flags, self.sections.get(name), &format!("[{name}]"))
    }
}

/// Overlays the flags that were actually given onto a config table.
/// Unset options, false switches and empty lists count as not given.
fn layer<T: Serialize + DeserializeOwned>(flags: &T, section: Option<&toml::Value>, what: &str) -> Result<T, CliError> {
    let mut base = match section {
        Some(v) => serde_json::to_value(v).map_err(|e| CliError::config(format!("{what}: {e}")))?,
        None => Value::Object(Default::default()),
    };
    let Value::Object(base_map) = &mut base else {
        return Err(CliError::config(format!("{what} must be a table")));
    };
    if let Value::Object(given) = serde_json::to_value(flags).expect("flags serialize") {
        for (key, value) in given {
            let unset = match &value {
                Value::Null | Value::Bool(false) => true,
                Value::Array(a) => a.is_empty(),
                _ => false,
            };
            if !unset {
                base_map.insert(key, value);
            }
        }
    }
    serde_json::from_value(base).map_err(|e| CliError::config(format!("{what}: {e}")))
}

/// Collects every configuration problem before failing.
#[derive(Debug, Default)]
pub struct Problems(Vec<String>);

impl Problems {
    pub fn push(&mut self, problem: impl Into<String>) {
        self.0.push(problem.into());
    }

    pub fn require<T>(&mut self, value: &Option<T>, flag: &str) {
        if value.is_none() {
            self.push(format!("--{flag} is required"));
        }
    }

    pub fn input(&mut self, path: &Option<PathBuf>, flag: &str) {
        match path {
            None => self.require(path, flag),
            Some(p) if !p.is_file() => self.push(format!("--{flag}: {} does not exist", p.display())),
            Some(_) => {}
        }
    }

    pub fn check<T>(&mut self, result: Result<T, CliError>) -> Option<T> {
        match result {
            Ok(v) => Some(v),
            Err(e) => {
                self.0.extend(e.problems);
                None
            }
        }
    }

    pub fn finish(self) -> Result<(), CliError> {
        if self.0.is_empty() {
            Ok(())
        } else {
            Err(CliError { category: Category::Config, problems: self.0 })
        }
    }
}
