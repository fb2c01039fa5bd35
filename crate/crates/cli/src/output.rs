//! Serialization with a fixed number format: every float is written with 17
//! significant digits, non-finite values as `inf`, `-inf` or `nan`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use bipartite_glass::complexity::{Cell, ComplexityCurve};
use bipartite_glass::simulator::MinimaSearch;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

/// A float as a JSON value; non-finite values become strings.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(fmt_f64(x)), Value::Number)
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => write!(out, "{u}").unwrap(),
            (_, Some(i), _) => write!(out, "{i}").unwrap(),
            (_, _, Some(f)) => out.push_str(&fmt_f64(f)),
            _ => out.push_str(&n.to_string()),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                write!(out, "{}{}: ", pad(indent + 1), Value::String(key.clone())).unwrap();
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

pub fn to_json(v: &Value) -> String {
    let mut s = String::new();
    write_value(&mut s, v, 0);
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files written by one run, with their digests.
#[derive(Default)]
pub struct Artifacts {
    pub files: Vec<(PathBuf, String)>,
}

impl Artifacts {
    pub fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {}", path.display());
        self.files.push((path.to_path_buf(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    pub fn write_json(&mut self, path: &Path, v: &Value) -> Result<()> {
        self.write(path, &to_json(v))
    }
}

fn cell(c: &Cell) -> String {
    match c {
        Cell::Value(v) => fmt_f64(*v),
        Cell::Unsupported => "unsupported".into(),
        Cell::Failed(_) => "nan".into(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// The complexity curve as CSV: `t,K,J,argmax_x,argmax_y1,argmax_y2,argmax_a,flags`.
///
/// `argmax_x` is the lower bound's maximizer when it has one and the upper
/// bound's otherwise; flags are `;`-separated.
pub fn curve_csv(curve: &ComplexityCurve) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "K", "J", "argmax_x", "argmax_y1", "argmax_y2", "argmax_a", "flags"])?;
    for p in &curve.points {
        let d = p.j_diagnostics.as_ref();
        w.write_record([
            fmt_f64(p.t),
            cell(&p.k),
            cell(&p.j),
            opt(d.map(|d| d.x).or(p.k_argmax_x)),
            opt(d.map(|d| d.y1)),
            opt(d.map(|d| d.y2)),
            opt(d.map(|d| d.a)),
            p.flags().join(";"),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// One row per descent record: `energy,index,grad_norm,duplicate_of`.
pub fn minima_csv(search: &MinimaSearch) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["energy", "index", "grad_norm", "duplicate_of"])?;
    for r in &search.records {
        w.write_record([
            fmt_f64(r.energy),
            r.index.to_string(),
            fmt_f64(r.grad_norm),
            r.duplicate_of.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02e23, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.005), "5.0000000000000001e-3");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn json_layout() {
        let v = serde_json::json!({"a": 1, "b": [0.5, "x"], "c": {}});
        assert_eq!(to_json(&v), "{\n  \"a\": 1,\n  \"b\": [\n    5.0000000000000000e-1,\n    \"x\"\n  ],\n  \"c\": {}\n}\n");
    }
}
