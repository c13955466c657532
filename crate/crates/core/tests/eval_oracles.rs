use ggez_core::eval::{average_rank, minmax_normalize, pairwise_agreement, HumanItemScores, PairCount};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn normalization_matches_spreadsheet_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let table: Vec<Vec<f64>> =
        (0..3).map(|c| (0..200).map(|_| rng.gen_range(0..=10 * (c + 1)) as f64).collect()).collect();
    let got = minmax_normalize(&table).unwrap();
    for item in 0..200 {
        // One cell at a time, as a spreadsheet would: (x - MIN(col)) / (MAX(col) - MIN(col)).
        let mut total = 0.0;
        for col in &table {
            let lo = col.iter().cloned().fold(f64::MAX, f64::min);
            let hi = col.iter().cloned().fold(f64::MIN, f64::max);
            total += (col[item] - lo) / (hi - lo);
        }
        assert!((got[item] - total / 3.0).abs() < 1e-12);
    }
}

/// Rank as 1 + #(strictly lower) + (#(equal) - 1) / 2.
fn oracle_rank(scores: &[f64], i: usize) -> f64 {
    let lower = scores.iter().filter(|&&s| s < scores[i]).count() as f64;
    let equal = scores.iter().filter(|&&s| s == scores[i]).count() as f64;
    1.0 + lower + (equal - 1.0) / 2.0
}

#[test]
fn average_rank_matches_counting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let models: Vec<String> = ["gemma", "merge-10", "sft", "other"].map(String::from).to_vec();
    let items: Vec<HumanItemScores> = (0..50)
        .map(|i| HumanItemScores {
            item: format!("q{i}"),
            scores: models.iter().map(|m| (m.clone(), f64::from(rng.gen_range(1..=3)))).collect(),
            language: Some(["tha", "vie"][i % 2].into()),
        })
        .collect();
    let report = average_rank(&items, &models, Some((1.0, 3.0))).unwrap();
    let mut sums = vec![0.0; models.len()];
    for item in &items {
        let scores: Vec<f64> = models.iter().map(|m| item.scores[m]).collect();
        let ranks: Vec<f64> = (0..scores.len()).map(|i| oracle_rank(&scores, i)).collect();
        let k = models.len() as f64;
        assert_eq!(ranks.iter().sum::<f64>(), k * (k + 1.0) / 2.0);
        for (s, r) in sums.iter_mut().zip(ranks) {
            *s += r;
        }
    }
    for (got, sum) in report.overall.iter().zip(sums) {
        assert!((got - sum / 50.0).abs() < 1e-12);
    }
    assert_eq!(report.by_language.len(), 2);
}

#[test]
fn exhaustive_agreement_matches_hand_enumeration() {
    let human = [3.0, 1.0, 2.0, 2.0, 5.0];
    let rm = [0.9, 0.2, 0.4, 0.1, 0.9];
    let mut agree = 0;
    let mut total = 0;
    for a in 0..5 {
        for b in 0..5 {
            if human[a] > human[b] {
                total += 1;
                if rm[a] > rm[b] {
                    agree += 1;
                }
            }
        }
    }
    let r = pairwise_agreement("rm", &human, &rm, PairCount::All, 0, false).unwrap();
    assert_eq!((r.pair_count, r.agreeing), (total, agree));
    assert_eq!((total, agree), (9, 7));
}

#[test]
fn sampled_pairs_follow_the_seed() {
    let human: Vec<f64> = (0..30).map(|i| f64::from(i % 4)).collect();
    let rm: Vec<f64> = (0..30).map(|i| f64::from((i * 7) % 11)).collect();
    let a = pairwise_agreement("rm", &human, &rm, PairCount::Sample(500), 11, false).unwrap();
    let b = pairwise_agreement("rm", &human, &rm, PairCount::Sample(500), 11, false).unwrap();
    assert_eq!(a, b);
}
