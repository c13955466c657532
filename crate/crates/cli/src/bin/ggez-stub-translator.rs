//! Test translator speaking the translation protocol. Modes: `identity`,
//! `upper`, and the default `tag`, which prefixes `[lang] `.

use std::io::{self, BufRead, Write};

use serde_json::{json, Value};

fn main() {
    let mode = std::env::args().nth(1).unwrap_or_else(|| "tag".into());
    let stdin = io::stdin();
    let mut out = io::BufWriter::new(io::stdout().lock());
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        let Ok(req) = serde_json::from_str::<Value>(&line) else { continue };
        let text = req["text"].as_str().unwrap_or_default();
        let lang = req["target_lang"].as_str().unwrap_or_default();
        let translated = match mode.as_str() {
            "identity" => text.to_string(),
            "upper" => text.to_uppercase(),
            _ => format!("[{lang}] {text}"),
        };
        let _ = writeln!(out, "{}", json!({ "id": req["id"], "text": translated }));
    }
}
