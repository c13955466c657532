//! Test evaluator: reads a checkpoint, takes the mean m of all float
//! values, and reports quality curves in m. With an all-zero global and an
//! all-one regional checkpoint, m equals the merge weight, so regional
//! quality rises with it and global quality falls.

use std::path::PathBuf;

use ggez_core::merge::load_checkpoint;
use serde_json::json;

fn main() {
    let Some(path) = std::env::args().nth(1).map(PathBuf::from) else {
        eprintln!("usage: ggez-stub-evaluator <checkpoint>");
        std::process::exit(2);
    };
    let ckpt = match load_checkpoint(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    let (mut sum, mut n) = (0.0, 0usize);
    for t in ckpt.tensors() {
        if let Some(values) = t.to_f64_vec() {
            n += values.len();
            sum += values.iter().sum::<f64>();
        }
    }
    let m = if n == 0 { 0.0 } else { sum / n as f64 };
    let q_global = 60.0 - 25.0 * m * m;
    let q_regional = 40.0 + 40.0 * m - 20.0 * m * m;
    println!("{}", json!({ "q_global": q_global, "q_regional": q_regional }));
}
