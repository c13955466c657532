//! Benchmark metric rows: CSV `model,benchmark,scope,value[,beta]` or JSONL
//! objects with the same keys.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde_json::Value;

use super::EvalError;
use crate::parity::{RegionPartition, Resolved};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow<T> {
    pub model: String,
    pub benchmark: String,
    /// `global`, `regional`, or a region id / country code for detail rows.
    pub scope: String,
    pub value: T,
    /// Merge coefficient the model was produced with, when known.
    pub beta: Option<f64>,
}

impl<T> MetricRow<T> {
    pub fn new(model: impl Into<String>, benchmark: impl Into<String>, scope: impl Into<String>, value: T) -> Self {
        Self { model: model.into(), benchmark: benchmark.into(), scope: scope.into(), value, beta: None }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }
}

/// Scope of a metric row after resolution against a partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopeTag {
    Global,
    Regional,
    /// Per-country or other-region detail; reported but not averaged.
    Detail(String),
}

impl ScopeTag {
    /// `global` and the partition's global name are global; `regional` and
    /// the target region id are regional; other region ids, country codes
    /// and `others` are detail.
    pub fn resolve(tag: &str, partition: &RegionPartition) -> Option<ScopeTag> {
        let t = tag.trim();
        if t.eq_ignore_ascii_case("global") {
            return Some(ScopeTag::Global);
        }
        if t.eq_ignore_ascii_case("regional") {
            return Some(ScopeTag::Regional);
        }
        if t.eq_ignore_ascii_case("others") {
            return Some(ScopeTag::Detail("others".into()));
        }
        match partition.resolve(t)? {
            Resolved::Global => Some(ScopeTag::Global),
            Resolved::Region(id) if id == t && id == partition.target() => Some(ScopeTag::Regional),
            Resolved::Region(_) => Some(ScopeTag::Detail(t.to_string())),
        }
    }
}

fn parse_beta(text: &str, at: &str) -> Result<Option<f64>, EvalError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(None);
    }
    match text.parse::<f64>() {
        Ok(b) if (0.0..=1.0).contains(&b) => Ok(Some(b)),
        _ => Err(EvalError::Parse(format!("{at}: beta {text:?} is not a number in [0, 1]"))),
    }
}

pub fn read_metrics_csv<T: Scalar, R: Read>(reader: R, label: &str) -> Result<Vec<MetricRow<T>>, EvalError> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv.headers().map_err(|e| EvalError::Parse(format!("{label}: {e}")))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(model), Some(bench), Some(scope), Some(value)) = (col("model"), col("benchmark"), col("scope"), col("value"))
    else {
        return Err(EvalError::Parse(format!("{label}: header must contain model,benchmark,scope,value")));
    };
    let beta = col("beta");
    let mut rows = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let at = format!("{label}:{}", i + 2);
        let record = record.map_err(|e| EvalError::Parse(format!("{at}: {e}")))?;
        let field = |j: usize| record.get(j).unwrap_or("");
        let raw = field(value);
        let v = T::parse_decimal(raw).ok_or_else(|| EvalError::Parse(format!("{at}: value {raw:?} is not a finite number")))?;
        rows.push(MetricRow {
            model: field(model).to_string(),
            benchmark: field(bench).to_string(),
            scope: field(scope).to_string(),
            value: v,
            beta: match beta {
                Some(j) => parse_beta(field(j), &at)?,
                None => None,
            },
        });
    }
    Ok(rows)
}

pub fn read_metrics_jsonl<T: Scalar, R: Read>(reader: R, label: &str) -> Result<Vec<MetricRow<T>>, EvalError> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let at = format!("{label}:{}", i + 1);
        let line = line.map_err(|e| EvalError::Io(format!("{at}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: Value = serde_json::from_str(&line).map_err(|e| EvalError::Parse(format!("{at}: {e}")))?;
        let text = |key: &str| -> Result<String, EvalError> {
            obj.get(key)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| EvalError::Parse(format!("{at}: missing string field {key:?}")))
        };
        // Numbers go through their decimal text so rationals stay exact.
        let number = |v: &Value| match v {
            Value::Number(n) => Some(n.to_string()),
            Value::String(s) => Some(s.clone()),
            _ => None,
        };
        let raw = obj.get("value").and_then(number).unwrap_or_default();
        let value =
            T::parse_decimal(&raw).ok_or_else(|| EvalError::Parse(format!("{at}: value {raw:?} is not a finite number")))?;
        let beta = match obj.get("beta") {
            None | Some(Value::Null) => None,
            Some(v) => parse_beta(&number(v).unwrap_or_else(|| "?".into()), &at)?,
        };
        rows.push(MetricRow { model: text("model")?, benchmark: text("benchmark")?, scope: text("scope")?, value, beta });
    }
    Ok(rows)
}

/// Reads a metrics file, choosing JSONL for `.jsonl`/`.json` and CSV otherwise.
pub fn read_metric_rows<T: Scalar>(path: &Path) -> Result<Vec<MetricRow<T>>, EvalError> {
    let file = std::fs::File::open(path).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    let label = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl" | "json") => read_metrics_jsonl(file, &label),
        _ => read_metrics_csv(file, &label),
    }
}
