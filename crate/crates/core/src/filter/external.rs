//! Line-delimited JSON request/response exchange with an external process.
//!
//! The process receives one JSON object per line on stdin and answers with
//! one JSON object per line on stdout, each carrying the request's `"id"`.
//! Responses may arrive in any order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Program plus fixed leading arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandSpec {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl CommandSpec {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self { program: program.into(), args }
    }

    /// Splits a whitespace-separated command line. No quoting support.
    pub fn parse(command_line: &str) -> Option<Self> {
        let mut parts = command_line.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(Self { program, args: parts.collect() })
    }
}

/// Sends all `requests` to one process invocation and returns the parsed
/// response objects keyed by their `"id"` field.
pub fn exchange(cmd: &CommandSpec, requests: &[Value]) -> Result<HashMap<String, Value>, String> {
    let mut child = Command::new(&cmd.program)
        .args(&cmd.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| format!("failed to start {}: {e}", cmd.program))?;

    let mut stdin = child.stdin.take().expect("stdin piped");
    let payload: Vec<u8> = requests
        .iter()
        .flat_map(|r| {
            let mut line = serde_json::to_vec(r).expect("request serializes");
            line.push(b'\n');
            line
        })
        .collect();
    // Feed stdin from a separate thread so a chatty child cannot deadlock us.
    let writer = std::thread::spawn(move || stdin.write_all(&payload));

    let stdout = child.stdout.take().expect("stdout piped");
    let mut responses = HashMap::new();
    let mut read_error = None;
    for line in BufReader::new(stdout).lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                read_error = Some(e.to_string());
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Value>(&line) {
            Ok(v) => match v.get("id").and_then(Value::as_str) {
                Some(id) => {
                    responses.insert(id.to_string(), v);
                }
                None => {
                    read_error.get_or_insert_with(|| format!("response without id: {line}"));
                }
            },
            // Other responses in the batch may still be usable; the missing
            // id surfaces as a per-request error.
            Err(_) => continue,
        }
    }
    let write_result = writer.join().map_err(|_| "stdin writer panicked".to_string())?;
    let output = child.wait_with_output().map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(format!(
            "{} exited with {}: {}",
            cmd.program,
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        ));
    }
    if let Err(e) = write_result {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(format!("writing to {}: {e}", cmd.program));
        }
    }
    if let Some(e) = read_error {
        if responses.is_empty() {
            return Err(e);
        }
    }
    Ok(responses)
}
