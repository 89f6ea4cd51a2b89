//! Per-superpixel feature matrices.
//!
//! The binary `.fmx` layout is the 4-byte magic `CTXF`, then `n` and `d` as
//! little-endian `u32`, then `n * d` little-endian `f32` values in row-major
//! order. Nothing follows the payload. CSV (one row per line, comma
//! separated) is accepted on read for hand-written fixtures.

use std::path::Path;

use crate::error::{Error, Location, Result};

pub const FMX_MAGIC: &[u8; 4] = b"CTXF";
const FMX_HEADER_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, data: Vec<f32>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::validation(format!(
                "feature matrix must be non-empty, got {n}x{d}"
            )));
        }
        if data.len() != n * d {
            return Err(Error::validation(format!(
                "feature matrix {n}x{d} needs {} values, got {}",
                n * d,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "non-finite feature value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { n, d, data })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    /// Inner product of rows `i` and `j`, accumulated in f64.
    pub fn dot(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .iter()
            .zip(self.row(j))
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum()
    }

    /// Scale every row to unit L2 norm. All-zero rows are rejected.
    pub fn normalize_rows(&mut self) -> Result<()> {
        for i in 0..self.n {
            let row = &mut self.data[i * self.d..(i + 1) * self.d];
            let norm = row
                .iter()
                .map(|&v| v as f64 * v as f64)
                .sum::<f64>()
                .sqrt();
            if norm == 0.0 {
                return Err(Error::validation(format!(
                    "feature row {i} is all zeros and cannot be normalized"
                )));
            }
            for v in row.iter_mut() {
                *v = (*v as f64 / norm) as f32;
            }
        }
        Ok(())
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (0..self.n).all(|i| ((self.dot(i, i)).sqrt() - 1.0).abs() <= tol)
    }

    pub fn to_fmx_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FMX_HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(FMX_MAGIC);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_fmx_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < FMX_HEADER_LEN {
            return Err(Error::parse(
                Location::Byte(bytes.len()),
                "truncated .fmx header",
            ));
        }
        if &bytes[..4] != FMX_MAGIC {
            return Err(Error::parse(Location::Byte(0), "bad .fmx magic"));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if n == 0 || d == 0 {
            return Err(Error::parse(
                Location::Byte(4),
                format!("empty dimensions {n}x{d}"),
            ));
        }
        let expected = n
            .checked_mul(d)
            .and_then(|c| c.checked_mul(4))
            .and_then(|c| c.checked_add(FMX_HEADER_LEN))
            .ok_or_else(|| Error::parse(Location::Byte(4), "dimensions overflow"))?;
        if bytes.len() < expected {
            // Point at the first value that is incomplete.
            let whole = (bytes.len() - FMX_HEADER_LEN) / 4;
            return Err(Error::parse(
                Location::Byte(FMX_HEADER_LEN + whole * 4),
                format!("truncated payload: expected {} values, found {whole}", n * d),
            ));
        }
        if bytes.len() > expected {
            return Err(Error::parse(
                Location::Byte(expected),
                "trailing bytes after payload",
            ));
        }
        let mut data = Vec::with_capacity(n * d);
        for (k, chunk) in bytes[FMX_HEADER_LEN..].chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::parse(
                    Location::Byte(FMX_HEADER_LEN + 4 * k),
                    "non-finite value",
                ));
            }
            data.push(v);
        }
        Ok(Self { n, d, data })
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut data = Vec::new();
        let mut d = None;
        let mut n = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let at = Location::Line(lineno + 1);
            let mut count = 0;
            for field in line.split(',') {
                let v: f32 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(at, format!("bad number {:?}", field.trim())))?;
                if !v.is_finite() {
                    return Err(Error::parse(at, "non-finite value"));
                }
                data.push(v);
                count += 1;
            }
            match d {
                None => d = Some(count),
                Some(d) if d != count => {
                    return Err(Error::parse(
                        at,
                        format!("expected {d} columns, found {count}"),
                    ))
                }
                _ => {}
            }
            n += 1;
        }
        let d = d.ok_or_else(|| Error::parse(Location::Line(1), "empty CSV"))?;
        Self::new(n, d, data)
    }
}

/// Read a `.fmx` file, or CSV when the file does not start with the magic.
pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(FMX_MAGIC) {
        FeatureMatrix::from_fmx_bytes(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|e| {
            Error::parse(Location::Byte(e.valid_up_to()), "CSV is not valid UTF-8")
        })?;
        FeatureMatrix::from_csv_str(text)
    }
}

pub fn write_feature_matrix(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, m.to_fmx_bytes()).map_err(|e| Error::io(path, e))
}
