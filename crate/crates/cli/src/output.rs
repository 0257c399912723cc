//! Number formatting, header lines and file writing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

/// Machine-readable float: 17 significant digits, round-trip exact.
pub fn f17(x: f64) -> String {
    if x.is_finite() {
        // Adding zero turns -0 into 0.
        format!("{:.16e}", x + 0.0)
    } else {
        format!("{x}")
    }
}

/// Human-readable float with 6 significant digits.
pub fn f6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..6).contains(&e) {
        format!("{:.*}", (5 - e).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

/// `x` rounded to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

/// One-line comment naming the program, the command and every effective
/// setting, in key order.
pub fn header<S: Serialize>(command: &str, settings: &S) -> String {
    let mut line = format!("# woundwave {} {command}", env!("CARGO_PKG_VERSION"));
    if let Ok(Value::Object(map)) = serde_json::to_value(settings) {
        for (k, v) in map {
            let _ = write!(line, " {k}={}", header_value(&v));
        }
    }
    line
}

fn header_value(v: &Value) -> String {
    match v {
        Value::Null => "none".into(),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => i.to_string(),
            (_, Some(u), _) => u.to_string(),
            (_, _, Some(f)) => f17(f),
            _ => n.to_string(),
        },
        Value::String(s) => s.replace(char::is_whitespace, "_"),
        Value::Array(a) => a.iter().map(header_value).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_json<S: Serialize>(dir: &Path, name: &str, value: &S) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
    text.push('\n');
    write_file(dir, name, &text)
}

/// Quotes a CSV field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
