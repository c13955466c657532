//! Agreement between a reward model and human judgments on ordered pairs.

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use super::EvalError;
use crate::seed::stage_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCount {
    /// Every qualifying ordered pair, once.
    All,
    Sample(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub reward_model: String,
    pub pair_count: usize,
    pub agreeing: usize,
    pub rate: f64,
    pub seed: u64,
}

/// Rate at which `rm[a] > rm[b]` over pairs with `human[a] > human[b]`.
/// Sampled pairs are uniform over qualifying pairs, with replacement unless
/// `distinct` is set. Ties on the reward model count as disagreement.
pub fn pairwise_agreement(
    reward_model: &str,
    human: &[f64],
    rm: &[f64],
    pairs: PairCount,
    seed: u64,
    distinct: bool,
) -> Result<AgreementReport, EvalError> {
    if human.len() != rm.len() {
        return Err(EvalError::Invalid(format!("{} human scores but {} reward scores", human.len(), rm.len())));
    }
    if let Some(v) = human.iter().chain(rm).find(|v| !v.is_finite()) {
        return Err(EvalError::Invalid(format!("non-finite score {v}")));
    }
    let ordered = |a: usize, b: usize| human[a] > human[b];
    let min = human.iter().copied().fold(f64::INFINITY, f64::min);
    let max = human.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if human.len() < 2 || min >= max {
        return Err(EvalError::NoOrderedPairs);
    }
    let chosen: Vec<(usize, usize)> = match pairs {
        PairCount::Sample(0) => return Err(EvalError::Invalid("pair count must be at least 1".into())),
        PairCount::All => qualifying(human),
        PairCount::Sample(n) if distinct => {
            let all = qualifying(human);
            if n > all.len() {
                return Err(EvalError::Invalid(format!("{n} distinct pairs requested but only {} exist", all.len())));
            }
            let mut rng = stage_rng(seed, "agreement/distinct");
            index::sample(&mut rng, all.len(), n).into_iter().map(|i| all[i]).collect()
        }
        PairCount::Sample(n) => {
            // Rejection sampling over ordered pairs of distinct items is
            // uniform over the qualifying ones.
            let mut rng = stage_rng(seed, "agreement/pairs");
            let len = human.len();
            let mut out = Vec::with_capacity(n);
            while out.len() < n {
                let a = rng.gen_range(0..len);
                let b = rng.gen_range(0..len);
                if ordered(a, b) {
                    out.push((a, b));
                }
            }
            out
        }
    };
    let agreeing = chosen.iter().filter(|&&(a, b)| rm[a] > rm[b]).count();
    Ok(AgreementReport {
        reward_model: reward_model.to_string(),
        pair_count: chosen.len(),
        agreeing,
        rate: agreeing as f64 / chosen.len() as f64,
        seed,
    })
}

fn qualifying(human: &[f64]) -> Vec<(usize, usize)> {
    let n = human.len();
    (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|&(a, b)| human[a] > human[b]).collect()
}
