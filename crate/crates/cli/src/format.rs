//! Tensor files.
//!
//! Text: one or more JSON objects `{"shape": [...], "data": [...]}`, data in
//! lexicographic order. Binary: records of `"LEXT"`, version byte `0x01`,
//! `u32` order, `u32` dims, then `f64` data, all little-endian. A file may
//! hold several records back to back; readers pick the format from the
//! first four bytes.

use std::fmt::Write as _;

use lextensor::{DenseTensor, Shape};
use serde::Deserialize;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"LEXT";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Binary,
}

#[derive(Debug, Error, PartialEq)]
pub enum FormatError {
    #[error("byte {offset}: {message}")]
    Binary { offset: usize, message: String },
    #[error("line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("record {record}: field `{field}`: {message}")]
    Field { record: usize, field: &'static str, message: String },
    #[error("no tensor records found")]
    Empty,
    #[error("cannot write {value} to a text file; use the binary format for non-finite values")]
    NonFinite { value: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TextRecord {
    shape: Vec<usize>,
    data: Vec<f64>,
}

pub fn read_tensors(bytes: &[u8]) -> Result<Vec<DenseTensor>, FormatError> {
    let tensors = if bytes.starts_with(MAGIC) { read_binary(bytes)? } else { read_text(bytes)? };
    if tensors.is_empty() {
        return Err(FormatError::Empty);
    }
    Ok(tensors)
}

fn read_text(bytes: &[u8]) -> Result<Vec<DenseTensor>, FormatError> {
    let mut out = Vec::new();
    for (i, record) in serde_json::Deserializer::from_slice(bytes).into_iter::<TextRecord>().enumerate() {
        let record = record.map_err(|e| FormatError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string().split(" at line").next().unwrap_or_default().to_string(),
        })?;
        let number = i + 1;
        let shape = Shape::new(record.shape.clone()).map_err(|e| FormatError::Field {
            record: number,
            field: "shape",
            message: format!("{e}"),
        })?;
        if shape.len() != record.data.len() {
            return Err(FormatError::Field {
                record: number,
                field: "data",
                message: format!("{} values for shape {shape} (needs {})", record.data.len(), shape.len()),
            });
        }
        out.push(DenseTensor::new(shape, record.data).expect("length checked"));
    }
    Ok(out)
}

fn read_binary(bytes: &[u8]) -> Result<Vec<DenseTensor>, FormatError> {
    let mut out = Vec::new();
    let mut pos = 0;
    let err = |offset, message: String| FormatError::Binary { offset, message };
    while pos < bytes.len() {
        let take = |pos: usize, n: usize, what: &str| {
            bytes
                .get(pos..pos + n)
                .ok_or_else(|| err(pos, format!("truncated {what}: need {n} bytes, {} left", bytes.len() - pos)))
        };
        if take(pos, 4, "magic")? != MAGIC {
            return Err(err(pos, "bad magic, expected \"LEXT\"".into()));
        }
        let version = take(pos + 4, 1, "version")?[0];
        if version != VERSION {
            return Err(err(pos + 4, format!("unsupported version {version}, expected {VERSION}")));
        }
        pos += 5;
        let order = u32::from_le_bytes(take(pos, 4, "order")?.try_into().unwrap()) as usize;
        if order == 0 {
            return Err(err(pos, "order must be at least 1".into()));
        }
        pos += 4;
        let mut dims = Vec::with_capacity(order.min(64));
        for k in 0..order {
            let d = u32::from_le_bytes(take(pos, 4, "dimension")?.try_into().unwrap()) as usize;
            if d == 0 {
                return Err(err(pos, format!("dimension {} is zero", k + 1)));
            }
            dims.push(d);
            pos += 4;
        }
        let shape = Shape::new(dims).map_err(|e| err(pos, e.to_string()))?;
        let need = shape.len().checked_mul(8).ok_or_else(|| err(pos, "data size overflows".into()))?;
        let raw = take(pos, need, "data")?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        pos += need;
        out.push(DenseTensor::new(shape, data).expect("length matches"));
    }
    Ok(out)
}

pub fn write_tensors(tensors: &[DenseTensor], format: Format) -> Result<Vec<u8>, FormatError> {
    match format {
        Format::Binary => Ok(write_binary(tensors)),
        Format::Text => write_text(tensors),
    }
}

fn write_binary(tensors: &[DenseTensor]) -> Vec<u8> {
    let mut out = Vec::new();
    for t in tensors {
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(t.order() as u32).to_le_bytes());
        for &d in t.dims() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in t.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// One JSON object per line.
fn write_text(tensors: &[DenseTensor]) -> Result<Vec<u8>, FormatError> {
    let mut out = String::new();
    for t in tensors {
        if let Some(&value) = t.as_slice().iter().find(|v| !v.is_finite()) {
            return Err(FormatError::NonFinite { value });
        }
        let shape = t.dims().iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let data = t.as_slice().iter().map(|&v| number(v)).collect::<Vec<_>>().join(",");
        writeln!(out, "{{\"shape\":[{shape}],\"data\":[{data}]}}").unwrap();
    }
    Ok(out.into_bytes())
}

/// Shortest decimal that reads back to the same `f64`; integers without a
/// fractional part.
pub fn number(v: f64) -> String {
    let s = format!("{v:?}");
    match s.strip_suffix(".0") {
        Some(int) => int.to_string(),
        None => s,
    }
}
