//! Min-max normalization of per-category scores and per-item averaging.

use super::EvalError;
use crate::scalar::Scalar;

/// Maps `values` onto [0, 1]. A constant category maps to 0.5 everywhere.
pub fn minmax<T: Scalar>(values: &[T]) -> Result<Vec<T>, EvalError> {
    let first = values.first().ok_or(EvalError::EmptyScores)?;
    if let Some(bad) = values.iter().find(|v| !v.is_finite_value()) {
        return Err(EvalError::Invalid(format!("non-finite score {bad}")));
    }
    let (mut lo, mut hi) = (first, first);
    for v in values {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    if lo == hi {
        let half = T::one() / (T::one() + T::one());
        return Ok(vec![half; values.len()]);
    }
    let range = hi.clone() - lo.clone();
    Ok(values.iter().map(|v| (v.clone() - lo.clone()) / range.clone()).collect())
}

/// `categories[c][i]` is item `i`'s score in category `c`. Each category is
/// normalized independently; the result is each item's mean over categories.
pub fn minmax_normalize<T: Scalar>(categories: &[Vec<T>]) -> Result<Vec<T>, EvalError> {
    let first = categories.first().ok_or(EvalError::EmptyScores)?;
    let items = first.len();
    if items == 0 {
        return Err(EvalError::EmptyScores);
    }
    if let Some((c, cat)) = categories.iter().enumerate().find(|(_, c)| c.len() != items) {
        return Err(EvalError::Invalid(format!("category {c} has {} scores, expected {items}", cat.len())));
    }
    let mut sums = vec![T::zero(); items];
    for cat in categories {
        for (s, v) in sums.iter_mut().zip(minmax(cat)?) {
            *s = s.clone() + v;
        }
    }
    let k = T::from_count(categories.len());
    Ok(sums.into_iter().map(|s| s / k.clone()).collect())
}
