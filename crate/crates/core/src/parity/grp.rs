use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::{round_to, Scalar};

use super::ParityError;

/// Which part of the global domain a set of metrics describes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Global,
    Regional,
    Region(String),
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Global => f.write_str("global"),
            Scope::Regional => f.write_str("regional"),
            Scope::Region(id) => f.write_str(id),
        }
    }
}

/// Named metric values for one scope. Metric ids are unique, values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct QualitySet<T> {
    scope: Scope,
    metrics: Vec<(String, T)>,
}

impl<T: Scalar> QualitySet<T> {
    pub fn new(scope: Scope) -> Self {
        Self { scope, metrics: Vec::new() }
    }

    pub fn from_pairs<I, S>(scope: Scope, pairs: I) -> Result<Self, ParityError>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
    {
        let mut set = Self::new(scope);
        for (id, value) in pairs {
            set.push(id, value)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, metric: impl Into<String>, value: T) -> Result<(), ParityError> {
        let metric = metric.into();
        if !value.is_finite_value() {
            return Err(ParityError::InvalidQuality(format!("{metric} = {value}")));
        }
        if self.metrics.iter().any(|(id, _)| *id == metric) {
            return Err(ParityError::DuplicateMetric(metric));
        }
        self.metrics.push((metric, value));
        Ok(())
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn metrics(&self) -> &[(String, T)] {
        &self.metrics
    }

    pub fn len(&self) -> usize {
        self.metrics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
    }
}

/// Weight on the global quality term plus reporting precision.
#[derive(Debug, Clone, PartialEq)]
pub struct GrpConfig<T> {
    alpha: T,
    pub rounding: u32,
}

impl<T: Scalar> GrpConfig<T> {
    pub fn new(alpha: T, rounding: u32) -> Result<Self, ParityError> {
        if !alpha.is_finite_value() || alpha < T::zero() || alpha > T::one() {
            return Err(ParityError::InvalidAlpha(alpha.to_string()));
        }
        Ok(Self { alpha, rounding })
    }

    /// alpha = 0.43 (SEA, 2023, rounded), one decimal place.
    pub fn sea_default() -> Self {
        let alpha = T::parse_decimal("0.43").expect("0.43 parses");
        Self::new(alpha, 1).expect("0.43 is a valid alpha")
    }

    pub fn alpha(&self) -> &T {
        &self.alpha
    }

    pub fn round(&self, value: f64) -> f64 {
        round_to(value, self.rounding)
    }
}

/// Unweighted mean of the set's metric values.
pub fn aggregate_quality<T: Scalar>(metrics: &QualitySet<T>) -> Result<T, ParityError> {
    if metrics.is_empty() {
        return Err(ParityError::EmptyQuality(metrics.scope().to_string()));
    }
    let sum = metrics.metrics().iter().fold(T::zero(), |acc, (_, v)| acc + v.clone());
    Ok(sum / T::from_count(metrics.len()))
}

/// `alpha * q_global + (1 - alpha) * q_regional`.
pub fn compute_grp<T: Scalar>(
    q_global: &T,
    q_regional: &T,
    cfg: &GrpConfig<T>,
) -> Result<T, ParityError> {
    for q in [q_global, q_regional] {
        if !q.is_finite_value() {
            return Err(ParityError::InvalidQuality(q.to_string()));
        }
    }
    let alpha = cfg.alpha().clone();
    let grp = alpha.clone() * q_global.clone() + (T::one() - alpha) * q_regional.clone();
    // Floating rounding can push a convex combination a hair outside its
    // endpoints; clamp so the bound holds exactly.
    let (lo, hi) = if q_global <= q_regional { (q_global, q_regional) } else { (q_regional, q_global) };
    Ok(if grp < *lo {
        lo.clone()
    } else if grp > *hi {
        hi.clone()
    } else {
        grp
    })
}

/// One evaluated candidate for best-parity selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    pub id: String,
    pub q_global: T,
    pub q_regional: T,
}

impl<T> Candidate<T> {
    pub fn new(id: impl Into<String>, q_global: T, q_regional: T) -> Self {
        Self { id: id.into(), q_global, q_regional }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T> {
    pub index: usize,
    pub id: String,
    pub grp: T,
}

/// Candidate with the highest GRP. Ties go to the earliest candidate.
pub fn best_parity_select<T: Scalar>(
    candidates: &[Candidate<T>],
    cfg: &GrpConfig<T>,
) -> Result<Selection<T>, ParityError> {
    let mut best: Option<Selection<T>> = None;
    for (index, c) in candidates.iter().enumerate() {
        let grp = compute_grp(&c.q_global, &c.q_regional, cfg)?;
        if best.as_ref().map_or(true, |b| grp > b.grp) {
            best = Some(Selection { index, id: c.id.clone(), grp });
        }
    }
    best.ok_or(ParityError::EmptyCandidates)
}
