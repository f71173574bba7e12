//! Shared output helpers: significant-digit formatting, JSON writing, and a
//! CLI error type that carries the process exit code.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub exit_code: i32,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

pub fn usage_error(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(CliError {
        message: message.into(),
        exit_code: crate::EXIT_USAGE,
    })
}

pub fn convergence_error(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(CliError {
        message: message.into(),
        exit_code: crate::EXIT_NO_CONVERGENCE,
    })
}

/// Rounds to 10 significant digits so JSON output is stable across runs and
/// leaves headroom over the 4-digit regression comparisons.
pub fn sig10(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.9e}").parse().unwrap_or(x)
}

pub fn round_value(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if let Some(rounded) = serde_json::Number::from_f64(sig10(f)) {
                    *n = rounded;
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_value),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes to pretty JSON with 10-significant-digit numbers, writing to
/// `out` or stdout.
pub fn emit_json(value: serde_json::Value, out: Option<&Path>) -> anyhow::Result<()> {
    let mut value = value;
    round_value(&mut value);
    let text = serde_json::to_string_pretty(&value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            writeln!(lock, "{text}")?;
        }
    }
    Ok(())
}

/// Parses "inf"/"infinity" or a positive float.
pub fn parse_constraint(s: &str) -> anyhow::Result<f64> {
    let t = s.trim().to_ascii_lowercase();
    if t == "inf" || t == "infinity" {
        return Ok(f64::INFINITY);
    }
    t.parse::<f64>()
        .map_err(|_| usage_error(format!("expected a number or 'inf', got '{s}'")))
}
