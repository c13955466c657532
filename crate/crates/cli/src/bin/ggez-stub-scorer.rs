//! Test scorer speaking the reward protocol. For each request line it
//! answers `{"id", "reward"}` where the reward is derived from the text:
//! `length` mode returns the character count, the default `likert` mode
//! maps it onto 1..=5. Texts containing `FAIL` get no answer.

use std::io::{self, BufRead, Write};

use serde_json::{json, Value};

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "likert".into());
    let stdin = io::stdin();
    let mut out = io::BufWriter::new(io::stdout().lock());
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let Ok(req) = serde_json::from_str::<Value>(&line) else { continue };
        let text = req["text"].as_str().unwrap_or_default();
        if text.contains("FAIL") {
            continue;
        }
        let chars = text.chars().count();
        let reward = match mode.as_str() {
            "length" => chars as f64,
            _ => (chars % 5 + 1) as f64,
        };
        let _ = writeln!(out, "{}", json!({ "id": req["id"], "reward": reward }));
    }
}
