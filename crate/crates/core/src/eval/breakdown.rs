//! Per-model Global Avg / Regional Avg / GRP tables from metric rows.

use std::cmp::Ordering;
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::Serialize;

use super::metrics::{MetricRow, ScopeTag};
use super::EvalError;
use crate::parity::{aggregate_quality, compute_grp, GrpConfig, QualitySet, RegionPartition, Scope};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBreakdown<T> {
    pub model: String,
    pub beta: Option<f64>,
    pub global: QualitySet<T>,
    pub regional: QualitySet<T>,
    /// `(scope, benchmark, value)` rows that feed neither average.
    pub details: Vec<(String, String, T)>,
    pub q_global: T,
    pub q_regional: T,
    pub grp: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Breakdown<T> {
    pub alpha: T,
    pub rounding: u32,
    pub region: String,
    /// Sorted by GRP, highest first; equal GRP keeps input order.
    pub models: Vec<ModelBreakdown<T>>,
}

#[derive(Serialize)]
struct JsonModel {
    model: String,
    beta: Option<f64>,
    global_avg: f64,
    regional_avg: f64,
    grp: f64,
    grp_rounded: f64,
    global: IndexMap<String, f64>,
    regional: IndexMap<String, f64>,
    details: Vec<JsonDetail>,
}

#[derive(Serialize)]
struct JsonDetail {
    scope: String,
    benchmark: String,
    value: f64,
}

#[derive(Serialize)]
struct JsonReport {
    alpha: f64,
    region: String,
    models: Vec<JsonModel>,
}

/// Groups rows by model (first-appearance order), averages each scope and
/// computes GRP.
pub fn build_breakdown<T: Scalar>(
    rows: &[MetricRow<T>],
    partition: &RegionPartition,
    cfg: &GrpConfig<T>,
) -> Result<Breakdown<T>, EvalError> {
    struct Acc<T> {
        beta: Option<Option<f64>>,
        global: QualitySet<T>,
        regional: QualitySet<T>,
        details: Vec<(String, String, T)>,
    }
    let mut by_model: IndexMap<&str, Acc<T>> = IndexMap::new();
    for row in rows {
        let acc = by_model.entry(row.model.as_str()).or_insert_with(|| Acc {
            beta: None,
            global: QualitySet::new(Scope::Global),
            regional: QualitySet::new(Scope::Regional),
            details: Vec::new(),
        });
        match acc.beta {
            None => acc.beta = Some(row.beta),
            Some(b) if b != row.beta => return Err(EvalError::InconsistentBeta(row.model.clone())),
            Some(_) => {}
        }
        let scope = ScopeTag::resolve(&row.scope, partition)
            .ok_or_else(|| EvalError::UnknownScope { model: row.model.clone(), scope: row.scope.clone() })?;
        match scope {
            ScopeTag::Global => acc.global.push(row.benchmark.clone(), row.value.clone())?,
            ScopeTag::Regional => acc.regional.push(row.benchmark.clone(), row.value.clone())?,
            ScopeTag::Detail(s) => acc.details.push((s, row.benchmark.clone(), row.value.clone())),
        }
    }

    let mut models = Vec::with_capacity(by_model.len());
    for (model, acc) in by_model {
        for (set, name) in [(&acc.global, "global"), (&acc.regional, "regional")] {
            if set.is_empty() {
                return Err(EvalError::IncompleteModel { model: model.to_string(), missing: name.to_string() });
            }
        }
        let q_global = aggregate_quality(&acc.global)?;
        let q_regional = aggregate_quality(&acc.regional)?;
        let grp = compute_grp(&q_global, &q_regional, cfg)?;
        models.push(ModelBreakdown {
            model: model.to_string(),
            beta: acc.beta.flatten(),
            global: acc.global,
            regional: acc.regional,
            details: acc.details,
            q_global,
            q_regional,
            grp,
        });
    }
    models.sort_by(|a, b| b.grp.partial_cmp(&a.grp).unwrap_or(Ordering::Equal));
    Ok(Breakdown {
        alpha: cfg.alpha().clone(),
        rounding: cfg.rounding,
        region: partition.target().to_string(),
        models,
    })
}

impl<T: Scalar> Breakdown<T> {
    fn fmt_value(&self, v: &T) -> String {
        format!("{:.*}", self.rounding as usize, crate::scalar::round_to(v.as_f64(), self.rounding))
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let header = ["Model".to_string(), "beta".into(), "Global Avg".into(), format!("{} Avg", self.region), "GRP".into()];
        let rows: Vec<[String; 5]> = self
            .models
            .iter()
            .map(|m| {
                [
                    m.model.clone(),
                    m.beta.map_or("-".into(), |b| b.to_string()),
                    self.fmt_value(&m.q_global),
                    self.fmt_value(&m.q_regional),
                    self.fmt_value(&m.grp),
                ]
            })
            .collect();
        let mut widths = header.clone().map(|h| h.len());
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = format!("alpha = {}\n", self.alpha.as_f64());
        for line in std::iter::once(&header).chain(&rows) {
            let cells: Vec<String> = line
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }

    /// `model,beta,global_avg,regional_avg,grp` with full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,beta,global_avg,regional_avg,grp\n");
        for m in &self.models {
            let beta = m.beta.map_or(String::new(), |b| b.to_string());
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&m.model),
                beta,
                m.q_global.as_f64(),
                m.q_regional.as_f64(),
                m.grp.as_f64()
            );
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let set = |s: &QualitySet<T>| s.metrics().iter().map(|(k, v)| (k.clone(), v.as_f64())).collect();
        let report = JsonReport {
            alpha: self.alpha.as_f64(),
            region: self.region.clone(),
            models: self
                .models
                .iter()
                .map(|m| JsonModel {
                    model: m.model.clone(),
                    beta: m.beta,
                    global_avg: m.q_global.as_f64(),
                    regional_avg: m.q_regional.as_f64(),
                    grp: m.grp.as_f64(),
                    grp_rounded: crate::scalar::round_to(m.grp.as_f64(), self.rounding),
                    global: set(&m.global),
                    regional: set(&m.regional),
                    details: m
                        .details
                        .iter()
                        .map(|(s, b, v)| JsonDetail { scope: s.clone(), benchmark: b.clone(), value: v.as_f64() })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_value(report).expect("report serializes")
    }

    /// `beta,grp,global_avg,regional_avg` for models with a known beta,
    /// ascending in beta.
    pub fn plot_csv(&self) -> String {
        let mut points: Vec<&ModelBreakdown<T>> = self.models.iter().filter(|m| m.beta.is_some()).collect();
        points.sort_by(|a, b| a.beta.partial_cmp(&b.beta).unwrap_or(Ordering::Equal));
        let mut out = String::from("beta,grp,global_avg,regional_avg\n");
        for m in points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                m.beta.unwrap_or_default(),
                m.grp.as_f64(),
                m.q_global.as_f64(),
                m.q_regional.as_f64()
            );
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
