use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::{merge_linear, save_checkpoint, Checkpoint, MergeError};
use crate::parity::{best_parity_select, compute_grp, Candidate, GrpConfig};

/// Global and regional quality of one merged model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub q_global: f64,
    pub q_regional: f64,
}

/// Scores a merged model for a given interpolation weight.
pub trait Evaluator: Sync {
    /// Whether the evaluator needs a merged checkpoint on disk.
    fn needs_checkpoint(&self) -> bool;

    fn evaluate(&self, beta: f64, checkpoint: Option<&Path>) -> Result<Evaluation, String>;
}

const BETA_MATCH_EPS: f64 = 1e-9;

/// Precomputed metrics keyed by interpolation weight.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LookupEvaluator {
    entries: Vec<(f64, Evaluation)>,
}

impl LookupEvaluator {
    pub fn new(entries: impl IntoIterator<Item = (f64, Evaluation)>) -> Self {
        Self { entries: entries.into_iter().collect() }
    }

    /// Reads `beta,q_global,q_regional` CSV.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, MergeError> {
        #[derive(Deserialize)]
        struct Row {
            beta: f64,
            q_global: f64,
            q_regional: f64,
        }
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut entries = Vec::new();
        for row in csv.deserialize::<Row>() {
            let row = row.map_err(|e| MergeError::Format(format!("sweep lookup table: {e}")))?;
            entries.push((row.beta, Evaluation { q_global: row.q_global, q_regional: row.q_regional }));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(f64, Evaluation)] {
        &self.entries
    }
}

impl Evaluator for LookupEvaluator {
    fn needs_checkpoint(&self) -> bool {
        false
    }

    fn evaluate(&self, beta: f64, _: Option<&Path>) -> Result<Evaluation, String> {
        self.entries
            .iter()
            .find(|(b, _)| (b - beta).abs() <= BETA_MATCH_EPS)
            .map(|(_, e)| *e)
            .ok_or_else(|| format!("no precomputed metrics for beta = {beta}"))
    }
}

/// Runs `program args... <checkpoint>` and reads
/// `{"q_global": x, "q_regional": y}` from its stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandEvaluator {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandEvaluator {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self { program: program.into(), args }
    }
}

impl Evaluator for CommandEvaluator {
    fn needs_checkpoint(&self) -> bool {
        true
    }

    fn evaluate(&self, _beta: f64, checkpoint: Option<&Path>) -> Result<Evaluation, String> {
        let path = checkpoint.ok_or("command evaluator needs a checkpoint path")?;
        let output = Command::new(&self.program)
            .args(&self.args)
            .arg(path)
            .output()
            .map_err(|e| format!("failed to run {}: {e}", self.program))?;
        if !output.status.success() {
            return Err(format!(
                "{} exited with {}: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            ));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let eval: Evaluation = serde_json::from_str(stdout.trim())
            .map_err(|e| format!("unparseable evaluator output {:?}: {e}", stdout.trim()))?;
        if !eval.q_global.is_finite() || !eval.q_regional.is_finite() {
            return Err(format!("non-finite evaluator output {eval:?}"));
        }
        Ok(eval)
    }
}

/// Checkpoints to merge for each grid point, and where to put the results.
#[derive(Debug, Clone, Copy)]
pub struct SweepSources<'a> {
    pub global: &'a Checkpoint,
    pub regional: &'a Checkpoint,
    pub out_dir: &'a Path,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub q_global: f64,
    pub q_regional: f64,
    pub grp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub beta_star: f64,
    pub grp_star: f64,
    pub rows: Vec<SweepRow>,
}

pub fn validate_grid(grid: &[f64]) -> Result<(), MergeError> {
    if grid.is_empty() {
        return Err(MergeError::InvalidGrid("grid is empty".into()));
    }
    for (i, b) in grid.iter().enumerate() {
        if !(0.0..=1.0).contains(b) {
            return Err(MergeError::InvalidGrid(format!("beta {b} outside [0, 1]")));
        }
        if grid[..i].iter().any(|prev| (prev - b).abs() <= BETA_MATCH_EPS) {
            return Err(MergeError::InvalidGrid(format!("beta {b} listed twice")));
        }
    }
    Ok(())
}

/// File name used for the merged checkpoint at `beta`.
pub fn merged_file_name(beta: f64) -> String {
    format!("merged_beta_{beta}.safetensors")
}

/// Evaluates every grid point and picks the weight with the best GRP.
/// Ties go to the earliest grid point.
pub fn sweep_beta(
    sources: Option<SweepSources<'_>>,
    grid: &[f64],
    evaluator: &dyn Evaluator,
    cfg: &GrpConfig<f64>,
) -> Result<SweepOutcome, MergeError> {
    validate_grid(grid)?;
    if evaluator.needs_checkpoint() && sources.is_none() {
        return Err(MergeError::InvalidGrid("evaluator needs checkpoints but none were given".into()));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &beta in grid {
        let checkpoint = match (&sources, evaluator.needs_checkpoint()) {
            (Some(src), true) => {
                let (merged, _) = merge_linear(src.global, src.regional, beta)?;
                let path = src.out_dir.join(merged_file_name(beta));
                save_checkpoint(&merged, &path)?;
                Some(path)
            }
            _ => None,
        };
        let eval = evaluator
            .evaluate(beta, checkpoint.as_deref())
            .map_err(|message| MergeError::Evaluator { beta, message })?;
        let grp = compute_grp(&eval.q_global, &eval.q_regional, cfg)
            .map_err(|e| MergeError::Evaluator { beta, message: e.to_string() })?;
        rows.push(SweepRow { beta, q_global: eval.q_global, q_regional: eval.q_regional, grp, checkpoint });
    }
    let candidates: Vec<_> =
        rows.iter().map(|r| Candidate::new(r.beta.to_string(), r.q_global, r.q_regional)).collect();
    let best = best_parity_select(&candidates, cfg).expect("grid is non-empty");
    Ok(SweepOutcome { beta_star: rows[best.index].beta, grp_star: best.grp, rows })
}
