//! Stand-in external candidate scorer speaking the line-delimited JSON
//! protocol on stdio. For tests only.
//!
//! mock-scorer [constant <token> | unsorted | hang | garbage]
//!
//! `constant` (default, token "mock") answers every request with one
//! candidate; `unsorted` answers with candidates in ascending order; `hang`
//! reads a request and never answers; `garbage` answers with non-JSON.

use std::io::{BufRead, Write};

use serde_json::{json, Value};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = args.first().map(String::as_str).unwrap_or("constant");
    let token = args.get(1).cloned().unwrap_or_else(|| "mock".to_string());

    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { return };
        let request: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(_) => return,
        };
        let id = request["id"].clone();
        let response = match mode {
            "hang" => loop {
                std::thread::sleep(std::time::Duration::from_secs(60));
            },
            "garbage" => "this is not json".to_string(),
            "unsorted" => json!({"id": id, "candidates": [
                {"token": "low", "logprob": -3.0},
                {"token": "high", "logprob": -0.5},
            ]})
            .to_string(),
            _ => json!({"id": id, "candidates": [{"token": token, "logprob": 0.0}]}).to_string(),
        };
        if writeln!(stdout, "{response}").and_then(|_| stdout.flush()).is_err() {
            return;
        }
    }
}
