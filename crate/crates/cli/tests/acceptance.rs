//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p ggez-cli --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ggez_core::eval::{
    average_rank, build_breakdown, pairwise_agreement, tied_ranks, HumanItemScores, MetricRow, PairCount,
};
use ggez_core::filter::{
    build_filtered_set, execute_translations, plan_translations, read_corpus, sea_translator_assignments,
    write_corpus, CorpusRecord, ExecuteOptions, FilterConfig, FnTranslator, TranslateRequest, TranslationPlan,
    Translator,
};
use ggez_core::merge::{
    f32_weights, load_checkpoint, merge_linear, save_checkpoint, sweep_beta, Checkpoint, Dtype, Evaluation,
    LookupEvaluator, TensorRecord,
};
use ggez_core::parity::{
    aggregate_quality, compute_grp, derive_alpha, GlobalizationTable, GrpConfig, QualitySet, RegionPartition, Scope,
};
use ggez_core::{Exact, Scalar};
use half::{bf16, f16};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = fn() -> Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [(&str, Check, Option<Duration>); 10] = [
        ("1 GRP golden tables", golden_tables, Some(Duration::from_secs(1))),
        ("2 alpha derivation", alpha_derivation, None),
        ("3 beta* selection", beta_selection, None),
        ("4 merge algebra", merge_algebra, Some(Duration::from_secs(60))),
        ("5 container round-trip", container_roundtrip, None),
        ("6 filter correctness", filter_correctness, None),
        ("7 translation resume", translation_resume, None),
        ("8 agreement protocol", agreement_protocol, None),
        ("9 rank aggregation", rank_aggregation, None),
        ("10 end-to-end smoke", end_to_end, Some(Duration::from_secs(10))),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let result = match (result, budget) {
            (Ok(()), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (r, _) => r,
        };
        match result {
            Ok(()) => println!("PASS  {name:<24} {elapsed:>10.2?}"),
            Err(e) => {
                failed += 1;
                println!("FAIL  {name:<24} {elapsed:>10.2?}  {e}");
            }
        }
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn q(text: &str) -> Exact {
    Exact::parse_decimal(text).unwrap()
}

fn mean(cells: &[&str]) -> Exact {
    cells.iter().map(|c| q(c)).fold(Exact::from_integer(0), |a, b| a + b) / Exact::from_integer(cells.len() as i64)
}

fn close(got: &Exact, printed: &str) -> bool {
    let diff = got.clone() - q(printed);
    let tol = Exact::new(1, 20);
    diff <= tol && -diff <= tol
}

// model, GRP, global avg, WC, CVQA, regional avg, SEAVQA, WC, CVQA
const VLM_AUTO: [[&str; 9]; 6] = [
    ["Gemma-3", "59.4", "63.5", "59.8", "67.2", "56.3", "41.0", "60.1", "67.8"],
    ["5%", "64.0", "64.3", "60.0", "68.7", "63.7", "61.2", "60.3", "69.5"],
    ["10%", "64.1", "64.4", "60.0", "68.8", "63.8", "61.7", "60.2", "69.5"],
    ["50%", "57.3", "56.7", "51.6", "61.8", "57.8", "59.5", "51.4", "62.6"],
    ["70%", "56.1", "56.3", "51.9", "60.6", "56.0", "54.0", "52.6", "61.3"],
    ["w/o merge", "42.2", "42.1", "48.5", "35.6", "42.2", "41.9", "48.6", "36.2"],
];
const VLM_AUTO_BETAS: [f64; 6] = [0.0, 0.05, 0.10, 0.5, 0.7, 1.0];

// model, GRP, global, SEA, fil, ind, tha, vie, zsm
const VLM_HUMAN: [[&str; 9]; 3] = [
    ["Gemma-3", "2.29", "2.54", "2.09", "1.69", "2.15", "2.17", "2.37", "2.07"],
    ["10%", "2.31", "2.42", "2.22", "1.88", "2.07", "2.29", "2.61", "2.25"],
    ["w/o merge", "1.74", "1.18", "2.23", "2.75", "2.29", "2.33", "1.76", "2.00"],
];

// model, correctness overall/T/L/C, naturalness overall/T/L/C
const IMAGE_HUMAN: [[&str; 9]; 3] = [
    ["SDXL", "1.491", "1.470", "1.636", "1.387", "1.675", "1.436", "2.023", "1.613"],
    ["25%", "1.569", "1.587", "1.729", "1.413", "1.767", "1.473", "2.124", "1.753"],
    ["w/o merge", "1.431", "1.473", "1.527", "1.307", "1.557", "1.340", "1.806", "1.560"],
];

// beta, GRP, CVQA global, CVQA SEA, CVQA others, SEAVQA SEA
const EMBED: [(f64, &str, &str, &str, &str, &str); 5] = [
    (0.0, "25.17", "25.51", "24.02", "25.84", "25.81"),
    (0.25, "24.96", "24.38", "24.44", "24.36", "26.36"),
    (0.5, "27.10", "27.52", "25.50", "27.97", "28.06"),
    (0.75, "27.96", "27.12", "27.51", "27.03", "29.66"),
    (1.0, "26.96", "26.75", "25.29", "27.07", "28.96"),
];

fn golden_tables() -> Result<(), String> {
    let cfg = GrpConfig::<Exact>::sea_default();
    let mut checked = 0;
    for [model, grp, g_avg, g_wc, g_cvqa, r_avg, r_seavqa, r_wc, r_cvqa] in VLM_AUTO {
        let global = QualitySet::from_pairs(Scope::Global, [("WC", q(g_wc)), ("CVQA", q(g_cvqa))]).unwrap();
        let regional =
            QualitySet::from_pairs(Scope::Regional, [("SEAVQA", q(r_seavqa)), ("WC", q(r_wc)), ("CVQA", q(r_cvqa))])
                .unwrap();
        let (qg, qr) = (aggregate_quality(&global).unwrap(), aggregate_quality(&regional).unwrap());
        let value = compute_grp(&qg, &qr, &cfg).unwrap();
        for (got, printed, what) in [(&qg, g_avg, "global avg"), (&qr, r_avg, "regional avg"), (&value, grp, "GRP")] {
            ensure!(close(got, printed), "vlm auto {model} {what}: {} vs {printed}", got.as_f64());
            checked += 1;
        }
    }
    for [model, grp, global, sea, langs @ ..] in VLM_HUMAN {
        let sea_mean = mean(&langs);
        ensure!(close(&sea_mean, sea), "vlm human {model} SEA: {}", sea_mean.as_f64());
        let value = compute_grp(&q(global), &q(sea), &cfg).unwrap();
        ensure!(close(&value, grp), "vlm human {model} GRP: {}", value.as_f64());
        checked += 2;
    }
    for [model, c_all, c_t, c_l, c_c, n_all, n_t, n_l, n_c] in IMAGE_HUMAN {
        ensure!(close(&mean(&[c_t, c_l, c_c]), c_all), "image human {model} correctness");
        ensure!(close(&mean(&[n_t, n_l, n_c]), n_all), "image human {model} naturalness");
        checked += 2;
    }
    let mut rows = Vec::new();
    for (beta, _, g, sea, others, seavqa) in EMBED {
        let model = format!("beta={beta}");
        for (bench, scope, v) in [("CVQA", "global", g), ("CVQA", "SEA", sea), ("CVQA", "others", others), ("SEAVQA", "SEA", seavqa)] {
            rows.push(MetricRow::new(model.clone(), bench, scope, q(v)).with_beta(beta));
        }
    }
    let b = build_breakdown(&rows, &RegionPartition::bundled(), &cfg).map_err(|e| e.to_string())?;
    for (beta, grp, ..) in EMBED {
        let m = b.models.iter().find(|m| m.beta == Some(beta)).unwrap();
        ensure!(close(&m.grp, grp), "embedding beta {beta} GRP: {}", m.grp.as_f64());
        checked += 1;
    }
    ensure!(checked == 18 + 6 + 6 + 5, "checked {checked} values");
    Ok(())
}

fn alpha_derivation() -> Result<(), String> {
    let table = GlobalizationTable::<Exact>::bundled();
    let sea = derive_alpha(&table, "SEA", 2023).map_err(|e| e.to_string())?;
    ensure!(sea == q("0.434"), "SEA 2023 = {sea}");
    ensure!((sea.as_f64() * 100.0).round() / 100.0 == 0.43, "SEA 2023 does not round to 0.43");
    let world = derive_alpha(&table, "World", 2023).map_err(|e| e.to_string())?;
    ensure!(world == q("0.5579"), "World 2023 = {world}");
    let table = GlobalizationTable::<f64>::bundled();
    ensure!((derive_alpha(&table, "SEA", 2023).unwrap() - 0.434).abs() < 1e-12, "f64 SEA 2023");
    Ok(())
}

fn beta_selection() -> Result<(), String> {
    let cfg = GrpConfig::new(0.43, 1).unwrap();
    let rows: Vec<(f64, Evaluation)> = VLM_AUTO_BETAS
        .into_iter()
        .zip(VLM_AUTO)
        .map(|(b, r)| (b, Evaluation { q_global: r[2].parse().unwrap(), q_regional: r[5].parse().unwrap() }))
        .collect();
    let lookup = LookupEvaluator::new(rows);
    let out = sweep_beta(None, &VLM_AUTO_BETAS[1..5], &lookup, &cfg).map_err(|e| e.to_string())?;
    ensure!(out.beta_star == 0.10 && cfg.round(out.grp_star) == 64.1, "vlm auto: {} / {}", out.beta_star, out.grp_star);
    let again = sweep_beta(None, &VLM_AUTO_BETAS[1..5], &lookup, &cfg).unwrap();
    ensure!(again == out, "repeat sweep differs");

    let rows: Vec<(f64, Evaluation)> = EMBED
        .iter()
        .map(|&(b, _, g, sea, _, seavqa)| {
            let qr = (sea.parse::<f64>().unwrap() + seavqa.parse::<f64>().unwrap()) / 2.0;
            (b, Evaluation { q_global: g.parse().unwrap(), q_regional: qr })
        })
        .collect();
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let out = sweep_beta(None, &grid, &LookupEvaluator::new(rows), &cfg).unwrap();
    ensure!(out.beta_star == 0.75, "embedding: {}", out.beta_star);

    // Equal GRP at every point: the first grid entry wins, in either order.
    let flat = LookupEvaluator::new(grid.map(|b| (b, Evaluation { q_global: 50.0, q_regional: 50.0 })));
    ensure!(sweep_beta(None, &grid, &flat, &cfg).unwrap().beta_star == 0.0, "tie not earliest");
    let reversed = [1.0, 0.75, 0.5, 0.25, 0.0];
    ensure!(sweep_beta(None, &reversed, &flat, &cfg).unwrap().beta_star == 1.0, "tie not earliest (reversed)");
    Ok(())
}

fn tensor(dtype: Dtype, bytes: Vec<u8>, n: usize) -> Checkpoint {
    let mut c = Checkpoint::new();
    c.insert(TensorRecord::new("w", dtype, vec![n], bytes).unwrap()).unwrap();
    c
}

fn merged(g: &Checkpoint, r: &Checkpoint, beta: f64) -> Vec<u8> {
    merge_linear(g, r, beta).unwrap().0.get("w").unwrap().data().to_vec()
}

fn ulp_f16(x: f16) -> f32 {
    f16::from_bits((x.to_bits() & 0x7fff) + 1).to_f32() - x.to_f32().abs()
}

fn ulp_bf16(x: bf16) -> f32 {
    bf16::from_bits((x.to_bits() & 0x7fff) + 1).to_f32() - x.to_f32().abs()
}

fn merge_algebra() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cases = 1000;
    let mut largest = 0;
    for case in 0..cases {
        // Log-uniform sizes over 1..=10^6, with the extreme pinned once.
        let n = if case == 0 { 1_000_000 } else { (rng.gen_range(0.0..6.0f64) * std::f64::consts::LN_10).exp() as usize };
        largest = largest.max(n);
        let beta = match case % 4 {
            0 => f64::from(rng.gen_range(0u32..=1024)) / 1024.0,
            _ => rng.gen_range(0.0..=1.0),
        };
        let g: Vec<f32> = (0..n).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
        let r: Vec<f32> = (0..n).map(|_| rng.gen_range(-1000.0..1000.0)).collect();
        let (wr, wg) = f32_weights(beta);
        match case % 3 {
            0 => {
                let gc = tensor(Dtype::F32, g.iter().flat_map(|v| v.to_le_bytes()).collect(), n);
                let rc = tensor(Dtype::F32, r.iter().flat_map(|v| v.to_le_bytes()).collect(), n);
                let (gb, rb) = (gc.get("w").unwrap().data(), rc.get("w").unwrap().data());
                ensure!(merged(&gc, &rc, 0.0) == gb, "case {case}: beta 0 not global");
                ensure!(merged(&gc, &rc, 1.0) == rb, "case {case}: beta 1 not regional");
                ensure!(merged(&gc, &gc, beta) == gb, "case {case}: self-merge changed bytes");
                let out = merged(&gc, &rc, beta);
                if case % 4 == 0 {
                    ensure!(out == merged(&rc, &gc, 1.0 - beta), "case {case}: beta symmetry");
                }
                for (i, c) in out.chunks_exact(4).enumerate() {
                    let expected = match beta {
                        b if b == 0.0 => g[i],
                        b if b == 1.0 => r[i],
                        _ => wr * r[i] + wg * g[i],
                    };
                    let got = f32::from_le_bytes(c.try_into().unwrap());
                    ensure!(got.to_bits() == expected.to_bits(), "case {case}[{i}]: {got} vs {expected}");
                }
            }
            1 => {
                let g: Vec<f16> = g.iter().map(|&v| f16::from_f32(v)).collect();
                let r: Vec<f16> = r.iter().map(|&v| f16::from_f32(v)).collect();
                let gc = tensor(Dtype::F16, g.iter().flat_map(|v| v.to_le_bytes()).collect(), n);
                let rc = tensor(Dtype::F16, r.iter().flat_map(|v| v.to_le_bytes()).collect(), n);
                ensure!(merged(&gc, &gc, beta) == gc.get("w").unwrap().data(), "case {case}: f16 self-merge");
                for (i, c) in merged(&gc, &rc, beta).chunks_exact(2).enumerate() {
                    let got = f16::from_le_bytes(c.try_into().unwrap());
                    let reference = wr * r[i].to_f32() + wg * g[i].to_f32();
                    ensure!((got.to_f32() - reference).abs() <= ulp_f16(got), "case {case}[{i}]: f16 {got} vs {reference}");
                }
            }
            _ => {
                let g: Vec<bf16> = g.iter().map(|&v| bf16::from_f32(v)).collect();
                let r: Vec<bf16> = r.iter().map(|&v| bf16::from_f32(v)).collect();
                let gc = tensor(Dtype::BF16, g.iter().flat_map(|v| v.to_le_bytes()).collect(), n);
                let rc = tensor(Dtype::BF16, r.iter().flat_map(|v| v.to_le_bytes()).collect(), n);
                ensure!(merged(&gc, &gc, beta) == gc.get("w").unwrap().data(), "case {case}: bf16 self-merge");
                for (i, c) in merged(&gc, &rc, beta).chunks_exact(2).enumerate() {
                    let got = bf16::from_le_bytes(c.try_into().unwrap());
                    let reference = wr * r[i].to_f32() + wg * g[i].to_f32();
                    ensure!((got.to_f32() - reference).abs() <= ulp_bf16(got), "case {case}[{i}]: bf16 {got} vs {reference}");
                }
            }
        }
    }
    ensure!(largest == 1_000_000, "largest tensor {largest}");
    Ok(())
}

fn random_checkpoint(rng: &mut ChaCha8Rng) -> Checkpoint {
    let mut ckpt = Checkpoint::new();
    let count = rng.gen_range(0..8);
    for i in 0..count {
        let dtype = *Dtype::ALL.choose(rng).unwrap();
        let rank = rng.gen_range(0..4);
        let shape: Vec<usize> = (0..rank).map(|_| rng.gen_range(0..6)).collect();
        let len = shape.iter().product::<usize>() * dtype.size();
        let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let name = format!("layer.{}.{}", rng.gen_range(0..100), i);
        ckpt.insert(TensorRecord::new(name, dtype, shape, data).unwrap()).unwrap();
    }
    if rng.gen_bool(0.5) {
        ckpt.metadata.insert("format".into(), "pt".into());
    }
    ckpt
}

fn same_tensors(a: &Checkpoint, b: &Checkpoint) -> bool {
    let names_a: Vec<&str> = a.names().collect();
    let names_b: Vec<&str> = b.names().collect();
    names_a == names_b
        && a.tensors().all(|t| {
            let u = b.get(t.name()).unwrap();
            (t.dtype(), t.shape(), t.data()) == (u.dtype(), u.shape(), u.data())
        })
}

fn container_roundtrip() -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut empty_seen = 0;
    for case in 0..300 {
        let ckpt = random_checkpoint(&mut rng);
        empty_seen += ckpt.tensors().filter(|t| t.element_count() == 0).count();
        let path = dir.path().join("c.safetensors");
        save_checkpoint(&ckpt, &path).map_err(|e| e.to_string())?;
        let back = load_checkpoint(&path).map_err(|e| e.to_string())?;
        ensure!(same_tensors(&ckpt, &back), "case {case}: tensors differ");
        ensure!(back.metadata == ckpt.metadata, "case {case}: metadata differs");
    }
    ensure!(empty_seen > 0, "no 0-element tensors generated");

    let data = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data");
    let expected: Value = serde_json::from_str(&std::fs::read_to_string(data.join("reference.json")).unwrap()).unwrap();
    let ckpt = load_checkpoint(&data.join("reference.safetensors")).map_err(|e| e.to_string())?;
    let tensors = expected["tensors"].as_object().unwrap();
    ensure!(ckpt.len() == tensors.len(), "fixture has {} tensors", ckpt.len());
    for (name, desc) in tensors {
        let t = ckpt.get(name).ok_or_else(|| format!("fixture tensor {name} missing"))?;
        let shape: Vec<usize> = desc["shape"].as_array().unwrap().iter().map(|d| d.as_u64().unwrap() as usize).collect();
        let hex: String = t.data().iter().map(|b| format!("{b:02x}")).collect();
        ensure!(t.dtype().as_str() == desc["dtype"].as_str().unwrap(), "{name}: dtype");
        ensure!(t.shape() == shape.as_slice(), "{name}: shape");
        ensure!(hex == desc["hex"].as_str().unwrap(), "{name}: bytes");
    }
    let path = dir.path().join("fixture.safetensors");
    save_checkpoint(&ckpt, &path).unwrap();
    ensure!(same_tensors(&ckpt, &load_checkpoint(&path).unwrap()), "fixture re-save differs");
    Ok(())
}

const SEA_CODES: [&str; 11] = ["SG", "ID", "MY", "BN", "TH", "PH", "VN", "MM", "KH", "LA", "TL"];
const OTHER_CODES: [&str; 12] = ["JP", "US", "BR", "DE", "NG", "IN", "EG", "CN", "KR", "FR", "MX", "AU"];

fn filter_correctness() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let corpus: Vec<CorpusRecord> = (0..100_000)
        .map(|i| {
            let region = match rng.gen_range(0..10) {
                0 => "SEA".to_string(),
                1 => "World".to_string(),
                2..=5 => SEA_CODES.choose(&mut rng).unwrap().to_string(),
                6 => SEA_CODES.choose(&mut rng).unwrap().to_ascii_lowercase(),
                _ => OTHER_CODES.choose(&mut rng).unwrap().to_string(),
            };
            let reward = if rng.gen_bool(0.1) { 3.0 } else { rng.gen_range(0.0..5.0) };
            CorpusRecord::new(format!("r{i}"), region, "eng", "text").with_reward(reward)
        })
        .collect();
    let partition = RegionPartition::bundled();
    let cfg = FilterConfig::new("SEA", 3.0, &partition).unwrap();
    let (kept, _) = build_filtered_set(corpus.clone(), &cfg, &partition).map_err(|e| e.to_string())?;
    let in_sea = |c: &str| c == "SEA" || SEA_CODES.contains(&c.to_ascii_uppercase().as_str());
    let expected: BTreeSet<&str> =
        corpus.iter().filter(|r| in_sea(&r.region) && r.reward.unwrap() >= 3.0).map(|r| r.id.as_str()).collect();
    let got: BTreeSet<&str> = kept.iter().map(|r| r.id.as_str()).collect();
    ensure!(got == expected, "kept {} ids, oracle {}", got.len(), expected.len());

    let boundary: Vec<CorpusRecord> = [2.9, 3.0, 4.5]
        .iter()
        .enumerate()
        .map(|(i, &r)| CorpusRecord::new(format!("b{i}"), "TH", "tha", "t").with_reward(r))
        .collect();
    let (kept, _) = build_filtered_set(boundary, &cfg, &partition).unwrap();
    let rewards: Vec<f64> = kept.iter().map(|r| r.reward.unwrap()).collect();
    ensure!(rewards == [3.0, 4.5], "boundary kept {rewards:?}");
    Ok(())
}

fn run_translations(plan: &TranslationPlan, src: &[CorpusRecord], dir: &Path, max_jobs: Option<usize>) -> usize {
    let t = FnTranslator(|r: &TranslateRequest| Ok(format!("<{}>{}", r.target_lang, r.text)));
    let translators: BTreeMap<String, &dyn Translator> =
        plan.assignments.values().map(|id| (id.clone(), &t as &dyn Translator)).collect();
    let opts = ExecuteOptions {
        output: dir.join("out.jsonl"),
        journal: dir.join("out.journal"),
        batch_size: 5,
        jobs: 2,
        max_jobs,
    };
    execute_translations(plan, src, &translators, &opts).unwrap().completed
}

fn translation_resume() -> Result<(), String> {
    let src: Vec<CorpusRecord> =
        (0..30).map(|i| CorpusRecord::new(format!("en{i}"), "World", "eng", format!("line {i}"))).collect();
    let targets: Vec<String> = ["ind", "vie", "zsm", "fil", "zho", "tha", "mya", "lao", "khm", "tam"].map(String::from).to_vec();
    let plan = plan_translations(&src, "eng", &targets, &sea_translator_assignments()).map_err(|e| e.to_string())?;
    let full = tempfile::tempdir().unwrap();
    run_translations(&plan, &src, full.path(), None);
    let reference = std::fs::read(full.path().join("out.jsonl")).unwrap();
    let count = read_corpus(&full.path().join("out.jsonl")).unwrap().len();
    ensure!(count == src.len() * targets.len(), "|D| = {count}");
    for cut in [1, 137, 299] {
        let dir = tempfile::tempdir().unwrap();
        ensure!(run_translations(&plan, &src, dir.path(), Some(cut)) == cut, "cut {cut} ran too far");
        run_translations(&plan, &src, dir.path(), None);
        ensure!(std::fs::read(dir.path().join("out.jsonl")).unwrap() == reference, "resume after {cut} differs");
    }
    Ok(())
}

fn agreement_protocol() -> Result<(), String> {
    let human = [3.0, 1.0, 2.0, 2.0, 5.0];
    let rm = [0.9, 0.2, 0.4, 0.1, 0.9];
    let r = pairwise_agreement("rm", &human, &rm, PairCount::All, 0, false).map_err(|e| e.to_string())?;
    // Ordered pairs: (0,1) (0,2) (0,3) (2,1) (3,1) (4,0) (4,1) (4,2) (4,3); rm misses (3,1) and ties (4,0).
    ensure!((r.pair_count, r.agreeing) == (9, 7), "counted {} / {}", r.agreeing, r.pair_count);
    ensure!(r.rate == 7.0 / 9.0, "rate {}", r.rate);

    let scores: Vec<f64> = (0..40).map(|i| f64::from((i * 17) % 23)).collect();
    let anti: Vec<f64> = scores.iter().map(|s| -s).collect();
    let same = pairwise_agreement("self", &scores, &scores, PairCount::Sample(300), 3, false).unwrap();
    let opposite = pairwise_agreement("anti", &scores, &anti, PairCount::Sample(300), 3, false).unwrap();
    ensure!(same.rate == 1.0 && opposite.rate == 0.0, "self {} anti {}", same.rate, opposite.rate);
    let all = pairwise_agreement("self", &scores, &scores, PairCount::All, 0, false).unwrap();
    ensure!(all.rate == 1.0, "exhaustive self {}", all.rate);

    let rm: Vec<f64> = (0..40).map(|i| f64::from((i * 7) % 11)).collect();
    let a = pairwise_agreement("rm", &scores, &rm, PairCount::Sample(500), 42, false).unwrap();
    let b = pairwise_agreement("rm", &scores, &rm, PairCount::Sample(500), 42, false).unwrap();
    ensure!(a == b, "same seed, different reports");
    Ok(())
}

fn rank_aggregation() -> Result<(), String> {
    // 1 + #(strictly lower) + (#(equal) - 1) / 2
    let oracle = |s: &[f64], i: usize| {
        let lower = s.iter().filter(|&&x| x < s[i]).count() as f64;
        let equal = s.iter().filter(|&&x| x == s[i]).count() as f64;
        1.0 + lower + (equal - 1.0) / 2.0
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..500 {
        let k = rng.gen_range(1..8);
        let scores: Vec<f64> = (0..k).map(|_| f64::from(rng.gen_range(1..=3))).collect();
        let ranks = tied_ranks(&scores);
        let kf = k as f64;
        ensure!(ranks.iter().sum::<f64>() == kf * (kf + 1.0) / 2.0, "case {case}: rank sum {ranks:?}");
        for (i, r) in ranks.iter().enumerate() {
            ensure!(*r == oracle(&scores, i), "case {case}: rank {i} of {scores:?} = {r}");
        }
    }
    let ties = tied_ranks(&[2.0, 2.0, 2.0]);
    ensure!(ties == [2.0, 2.0, 2.0], "all tied: {ties:?}");

    let models: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
    let items: Vec<HumanItemScores> = (0..60)
        .map(|i| HumanItemScores {
            item: format!("q{i}"),
            scores: models.iter().map(|m| (m.clone(), f64::from(rng.gen_range(1..=3)))).collect(),
            language: Some(["tha", "vie", "ind"][i % 3].into()),
        })
        .collect();
    let report = average_rank(&items, &models, Some((1.0, 3.0))).map_err(|e| e.to_string())?;
    for (m, got) in report.overall.iter().enumerate() {
        let expected = items
            .iter()
            .map(|it| {
                let s: Vec<f64> = models.iter().map(|x| it.scores[x]).collect();
                oracle(&s, m)
            })
            .sum::<f64>()
            / items.len() as f64;
        ensure!((got - expected).abs() < 1e-12, "model {m}: {got} vs {expected}");
    }
    ensure!((report.overall.iter().sum::<f64>() - 10.0).abs() < 1e-9, "mean ranks do not sum to 10");
    Ok(())
}

fn ggez(args: &[&str]) -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ggez")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("ggez {} exited {:?}: {}", args[0], out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    serde_json::from_slice(&out.stdout).map_err(|e| format!("ggez {}: {e}", args[0]))
}

fn constant_checkpoint(value: f32) -> Checkpoint {
    let mut c = Checkpoint::new();
    let f32s: Vec<u8> = (0..12).flat_map(|_| value.to_le_bytes()).collect();
    let f16s: Vec<u8> = (0..6).flat_map(|_| f16::from_f32(value).to_le_bytes()).collect();
    let bf16s: Vec<u8> = (0..4).flat_map(|_| bf16::from_f32(value).to_le_bytes()).collect();
    c.insert(TensorRecord::new("embed.weight", Dtype::F32, vec![4, 3], f32s).unwrap()).unwrap();
    c.insert(TensorRecord::new("attn.weight", Dtype::F16, vec![2, 3], f16s).unwrap()).unwrap();
    c.insert(TensorRecord::new("mlp.bias", Dtype::BF16, vec![4], bf16s).unwrap()).unwrap();
    c
}

fn end_to_end() -> Result<(), String> {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let regions = ["TH", "VN", "ID", "PH", "US", "JP", "SEA", "World"];
    let corpus: Vec<CorpusRecord> = (0..200)
        .map(|i| CorpusRecord::new(format!("c{i}"), regions[i % regions.len()], "eng", "x".repeat(i % 13 + 1)))
        .collect();
    write_corpus(Path::new(&p("corpus.jsonl")), &corpus).map_err(|e| e.to_string())?;

    let scorer = env!("CARGO_BIN_EXE_ggez-stub-scorer");
    let filtered = ggez(&["filter", "--input", &p("corpus.jsonl"), "--output", &p("filtered.jsonl"), "--scorer", scorer])?;
    let kept = read_corpus(Path::new(&p("filtered.jsonl"))).map_err(|e| e.to_string())?;
    ensure!(!kept.is_empty() && kept.len() < corpus.len(), "filter kept {} ({filtered})", kept.len());
    ensure!(kept.iter().all(|r| r.reward.unwrap() >= 3.0), "filtered reward below threshold");

    let translator = format!("stub={}", env!("CARGO_BIN_EXE_ggez-stub-translator"));
    ggez(&[
        "translate", "--input", &p("filtered.jsonl"), "--output", &p("translated.jsonl"),
        "--targets", "tha,vie", "--translator", &translator, "--assign", "tha=stub", "--assign", "vie=stub",
    ])?;
    let translated = read_corpus(Path::new(&p("translated.jsonl"))).map_err(|e| e.to_string())?;
    ensure!(translated.len() == kept.len() * 2, "translated {} of {}", translated.len(), kept.len() * 2);

    let mix = ggez(&[
        "--seed", "7", "mix",
        "--source", &format!("filtered={}:1.0", p("filtered.jsonl")),
        "--source", &format!("translated={}:0.5", p("translated.jsonl")),
        "--output", &p("mix.jsonl"), "--manifest", &p("mix.json"),
    ])?;
    let mixed = read_corpus(Path::new(&p("mix.jsonl"))).map_err(|e| e.to_string())?;
    ensure!(mixed.len() == kept.len() + translated.len() / 2, "mix has {} records ({mix})", mixed.len());

    save_checkpoint(&constant_checkpoint(0.0), Path::new(&p("global.safetensors"))).unwrap();
    save_checkpoint(&constant_checkpoint(1.0), Path::new(&p("regional.safetensors"))).unwrap();
    ggez(&["merge", "--global", &p("global.safetensors"), "--regional", &p("regional.safetensors"), "--beta", "0.25", "--out", &p("merged.safetensors")])?;
    let merged = load_checkpoint(Path::new(&p("merged.safetensors"))).map_err(|e| e.to_string())?;
    ensure!(merged.tensors().all(|t| t.to_f64_vec().unwrap().iter().all(|&v| v == 0.25)), "merge at 0.25 not constant");

    let sweep = ggez(&[
        "sweep", "--global", &p("global.safetensors"), "--regional", &p("regional.safetensors"),
        "--evaluator", env!("CARGO_BIN_EXE_ggez-stub-evaluator"), "--grid", "0,0.25,0.5,0.75,1",
        "--out-dir", &p("sweep"), "--rows-out", &p("rows.csv"),
    ])?;
    // The stub's GRP curve 48.6 + 22.8b - 22.15b^2 peaks near b = 0.51.
    ensure!(sweep["result"]["beta_star"] == 0.5, "beta* = {}", sweep["result"]["beta_star"]);

    ggez(&["report", "--metrics", &p("rows.csv"), "--out-dir", &p("report")])?;
    let text = std::fs::read_to_string(dir.path().join("report/report.txt")).map_err(|e| e.to_string())?;
    ensure!(text.contains("GRP") && text.contains("beta=0.5"), "report:\n{text}");
    let csv = std::fs::read_to_string(dir.path().join("report/grp_vs_beta.csv")).map_err(|e| e.to_string())?;
    ensure!(csv.lines().count() == 6, "plot data:\n{csv}");
    Ok(())
}
