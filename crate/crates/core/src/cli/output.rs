//! Canonical document formatting. Keys are sorted, reals are written with
//! 17 significant digits and non-finite reals become `null`, so equal inputs
//! give byte-equal files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};

pub fn real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings always serialise"));
}

fn write_value(out: &mut String, v: &Value, indent: usize, pretty: bool) {
    let pad = |out: &mut String, level: usize| {
        if pretty {
            out.push('\n');
            for _ in 0..level {
                out.push_str("  ");
            }
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&real(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => write_string(out, s),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // short numeric arrays stay on one line
            let flat = items.iter().all(|i| matches!(i, Value::Number(_) | Value::Null)) && items.len() <= 4;
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                    if flat && pretty {
                        out.push(' ');
                    }
                }
                if !flat {
                    pad(out, indent + 1);
                }
                write_value(out, item, indent + 1, pretty);
            }
            if !flat {
                pad(out, indent);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                pad(out, indent + 1);
                write_string(out, key);
                out.push(':');
                if pretty {
                    out.push(' ');
                }
                write_value(out, item, indent + 1, pretty);
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Pretty canonical JSON with a trailing newline.
pub fn to_document<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| LabError::Internal(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0, true);
    out.push('\n');
    Ok(out)
}

/// Single-line canonical JSON.
pub fn to_line<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| LabError::Internal(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0, false);
    Ok(out)
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_file(path: &Path, text: &str) -> Result<String> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(digest(text.as_bytes()))
}

/// Header lines shared by every table.
#[derive(Clone, Debug)]
pub struct TableHeader {
    pub symbol: String,
    pub n: usize,
    pub m: u32,
    pub b: f64,
    pub l: f64,
    pub sigma: f64,
    pub config_hash: String,
}

impl TableHeader {
    pub fn render(&self, columns: &[&str]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# symbol: {}", self.symbol);
        let _ = writeln!(s, "# n: {}", self.n);
        let _ = writeln!(s, "# m: {}", self.m);
        let _ = writeln!(s, "# b: {}", real(self.b));
        let _ = writeln!(s, "# L: {}", real(self.l));
        let _ = writeln!(s, "# sigma: {}", real(self.sigma));
        let _ = writeln!(s, "# config_hash: {}", self.config_hash);
        let _ = writeln!(s, "# version: {}", env!("CARGO_PKG_VERSION"));
        s.push_str(&columns.join("\t"));
        s.push('\n');
        s
    }
}
