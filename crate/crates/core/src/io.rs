//! Output helpers shared by the CLI and the web demo.
//!
//! Floats go through `serde_json`, which prints the shortest string that
//! round-trips. Complex numbers are `[re, im]`; matrices are row-major
//! `{rows, cols, data}`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

pub fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_list(zs: &[Complex64]) -> Value {
    Value::Array(zs.iter().map(|&z| complex(z)).collect())
}

pub fn matrix(m: &CMatrix) -> Value {
    let data: Vec<Value> = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| complex(m[(i, j)]))
        .collect();
    json!({ "rows": m.nrows(), "cols": m.ncols(), "data": data })
}

/// Reads a matrix written by [`matrix`].
pub fn matrix_from(value: &Value) -> Result<CMatrix> {
    let bad = || Error::Config("malformed matrix JSON".into());
    let rows = value["rows"].as_u64().ok_or_else(bad)? as usize;
    let cols = value["cols"].as_u64().ok_or_else(bad)? as usize;
    let data = value["data"].as_array().ok_or_else(bad)?;
    if data.len() != rows * cols {
        return Err(bad());
    }
    let entries = data
        .iter()
        .map(|e| match (e[0].as_f64(), e[1].as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(bad()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CMatrix::from_row_slice(rows, cols, &entries))
}

/// One float in the same representation JSON output uses.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite float")
    } else {
        format!("{x}")
    }
}

/// `# `-prefixed header lines that echo a JSON document.
pub fn csv_header(echo: &Value) -> String {
    let text = serde_json::to_string(echo).expect("json value");
    format!("# {text}\n")
}

pub fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Config(format!("cannot write output: {e}"));
    match path {
        Some(p) => std::fs::write(p, text).map_err(io_err),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(io_err)?;
            out.flush().map_err(io_err)
        }
    }
}

pub fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value");
    s.push('\n');
    s
}
