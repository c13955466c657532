use std::fmt;

use ggez_core::eval::EvalError;
use ggez_core::filter::FilterError;
use ggez_core::merge::MergeError;
use ggez_core::parity::ParityError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Config,
    Data,
    External,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Data => 3,
            Category::External => 4,
        }
    }
}

/// A failed run: its category decides the exit code. Configuration errors
/// carry every problem found, not just the first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub category: Category,
    pub problems: Vec<String>,
}

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self { category, problems: vec![message.into()] }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Category::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(Category::Data, message)
    }

    pub fn external(message: impl Into<String>) -> Self {
        Self::new(Category::External, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.category {
            Category::Config => "configuration error",
            Category::Data => "data error",
            Category::External => "external tool error",
        };
        write!(f, "{label}")?;
        if let [only] = self.problems.as_slice() {
            return write!(f, ": {only}");
        }
        for p in &self.problems {
            write!(f, "\n  - {p}")?;
        }
        Ok(())
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        let category = match e {
            FilterError::InvalidThreshold(_)
            | FilterError::MissingTranslator(_)
            | FilterError::InvalidPlan(_)
            | FilterError::InvalidProportion(_) => Category::Config,
            FilterError::ScoringFailed { .. } => Category::External,
            _ => Category::Data,
        };
        Self::new(category, e.to_string())
    }
}

impl From<MergeError> for CliError {
    fn from(e: MergeError) -> Self {
        let category = match e {
            MergeError::InvalidBeta(_) | MergeError::InvalidGrid(_) => Category::Config,
            MergeError::Evaluator { .. } => Category::External,
            _ => Category::Data,
        };
        Self::new(category, e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<ParityError> for CliError {
    fn from(e: ParityError) -> Self {
        let category = match e {
            ParityError::InvalidAlpha(_) | ParityError::InvalidPartition(_) => Category::Config,
            _ => Category::Data,
        };
        Self::new(category, e.to_string())
    }
}
