//! JSON/CSV helpers shared by the sample, model and ROM file formats.
//! Numbers are written with 17 significant digits so that every double
//! round-trips exactly.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde_json::value::RawValue;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{C64, CMat};

/// Format a double with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        // keep the sign of negative zero out of files
        return "0.0000000000000000e0".into();
    }
    format!("{x:.16e}")
}

pub fn num(x: f64) -> Result<Box<RawValue>> {
    if !x.is_finite() {
        return Err(Error::InvariantViolation(format!("non-finite value {x} cannot be written")));
    }
    RawValue::from_string(fmt17(x)).map_err(|e| Error::InvariantViolation(e.to_string()))
}

pub fn real_matrix(m: &DMatrix<f64>) -> Result<Vec<Vec<Box<RawValue>>>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| num(m[(i, j)])).collect()).collect()
}

pub fn complex_number(z: C64) -> Result<[Box<RawValue>; 2]> {
    Ok([num(z.re)?, num(z.im)?])
}

pub fn complex_matrix(m: &CMat) -> Result<Vec<Vec<[Box<RawValue>; 2]>>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| complex_number(m[(i, j)])).collect())
        .collect()
}

/// Pretty JSON of `body` with the fields of `metadata` (a JSON object)
/// appended at the top level.
pub fn to_json_with<T: serde::Serialize>(body: &T, metadata: Option<&Value>) -> Result<String> {
    #[derive(serde::Serialize)]
    struct Wrapped<'a, T> {
        #[serde(flatten)]
        body: &'a T,
        #[serde(flatten)]
        metadata: Option<&'a Value>,
    }
    if metadata.is_some_and(|m| !m.is_object()) {
        return Err(Error::InvariantViolation("file metadata must be a JSON object".into()));
    }
    serde_json::to_string_pretty(&Wrapped { body, metadata }).map_err(|e| Error::InvariantViolation(e.to_string()))
}

/// Write `contents` to `path` atomically (temp file in the same directory, then rename).
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn parse_json(text: &str, source: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("{source}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })
}

fn perr(path: &str, message: impl Into<String>) -> Error {
    Error::Parse { location: path.to_string(), message: message.into() }
}

pub fn field<'a>(v: &'a Value, name: &str, path: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| perr(path, format!("missing field \"{name}\"")))
}

pub fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| perr(path, "expected a number"))
}

pub fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| perr(path, "expected a non-negative integer"))
}

pub fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| perr(path, "expected an array"))
}

pub fn as_complex(v: &Value, path: &str) -> Result<C64> {
    let a = as_array(v, path)?;
    if a.len() != 2 {
        return Err(perr(path, "expected [re, im]"));
    }
    Ok(C64::new(as_f64(&a[0], &format!("{path}[0]"))?, as_f64(&a[1], &format!("{path}[1]"))?))
}

pub fn as_real_matrix(v: &Value, rows: usize, cols: usize, path: &str) -> Result<DMatrix<f64>> {
    let r = as_array(v, path)?;
    if r.len() != rows {
        return Err(perr(path, format!("expected {rows} rows, got {}", r.len())));
    }
    let mut m = DMatrix::zeros(rows, cols);
    for (i, row) in r.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let row = as_array(row, &rp)?;
        if row.len() != cols {
            return Err(perr(&rp, format!("expected {cols} columns, got {}", row.len())));
        }
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = as_f64(x, &format!("{rp}[{j}]"))?;
        }
    }
    Ok(m)
}

pub fn as_complex_matrix(v: &Value, rows: usize, cols: usize, path: &str) -> Result<CMat> {
    let r = as_array(v, path)?;
    if r.len() != rows {
        return Err(perr(path, format!("expected {rows} rows, got {}", r.len())));
    }
    let mut m = CMat::zeros(rows, cols);
    for (i, row) in r.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let row = as_array(row, &rp)?;
        if row.len() != cols {
            return Err(perr(&rp, format!("expected {cols} columns, got {}", row.len())));
        }
        for (j, x) in row.iter().enumerate() {
            m[(i, j)] = as_complex(x, &format!("{rp}[{j}]"))?;
        }
    }
    Ok(m)
}

/// Render rows as CSV with a header line and 17-digit floats.
pub fn csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| fmt17(*x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
