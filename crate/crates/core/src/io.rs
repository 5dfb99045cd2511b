//! File formats and number formatting.
//!
//! Hypergraph files are line-oriented: the first line is `{"N": <int>}`, each
//! following line a JSON array of sorted distinct vertex ids. An empty array
//! is one debris edge; a repeated line adds multiplicity.

use std::io::{BufRead, Write};

use serde::Deserialize;
use serde_json::{Number, Value};

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, VertexId};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// JSON number carrying exactly the text of [`fmt_f64`]; non-finite values map
/// to `null`.
pub fn json_f64(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    fmt_f64(x)
        .parse::<Number>()
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

pub fn json_f64_array(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| json_f64(x)).collect())
}

#[derive(Deserialize)]
struct Header {
    #[serde(rename = "N")]
    n: usize,
}

pub fn write_hypergraph<W: Write>(mut out: W, h: &Hypergraph) -> std::io::Result<()> {
    writeln!(out, "{{\"N\": {}}}", h.n_vertices())?;
    for (edge, mult) in h.edges() {
        let line = serde_json::to_string(edge).expect("vertex ids serialize");
        for _ in 0..mult {
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

pub fn read_hypergraph<R: BufRead>(input: R) -> Result<Hypergraph> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header line".into(),
    })?;
    let header: Header = serde_json::from_str(&first?).map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    let mut h = Hypergraph::new(header.n)?;
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let edge: Vec<VertexId> = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        if edge.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "vertex ids must be sorted and distinct".into(),
            });
        }
        h.add_edge(edge).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
    }
    Ok(h)
}
