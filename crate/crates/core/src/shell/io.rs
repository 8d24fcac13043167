//! Output formats and the run manifest.
//!
//! Every artifact is rendered to memory first; [`Artifacts::commit`] writes the
//! files only after the whole computation succeeded.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

/// Shortest decimal that reparses to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// CSV text with the given header; every row must match its length.
pub fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::invalid(format!("csv: {e}"));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))
}

pub fn coord_header(d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("x_{k}")).collect()
}

/// Reads rows of `d` numbers; an optional non-numeric first row is a header.
pub fn read_points_csv(text: &str, d: usize) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::invalid(format!("csv: {e}")))?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if v.len() == d && v.iter().all(|x| x.is_finite()) => out.push(v),
            Ok(v) if v.len() != d => {
                return Err(Error::invalid(format!("line {line}: expected {d} values, got {}", v.len())));
            }
            Ok(_) => return Err(Error::invalid(format!("line {line}: non-finite value"))),
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(e) => return Err(Error::invalid(format!("line {line}: {e}"))),
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("points file contains no rows"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatHeader {
    pub format: &'static str,
    pub dtype: &'static str,
    /// Axis lengths of the complex array, slowest first.
    pub dims: Vec<usize>,
    pub axes: Vec<&'static str>,
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// Byte offset of the first value.
    pub data_offset: usize,
}

/// One JSON header line, then interleaved little-endian `re, im` pairs.
pub fn flat_binary(mut header: FlatHeader, values: &[Complex64]) -> Result<Vec<u8>> {
    let expected: usize = header.dims.iter().product();
    if expected != values.len() {
        return Err(Error::invalid(format!("flat array has {} values, header says {expected}", values.len())));
    }
    // the offset depends on its own width; iterate to a fixed point
    let mut line = String::new();
    for _ in 0..4 {
        line = serde_json::to_string(&header)?;
        let offset = line.len() + 1;
        if offset == header.data_offset {
            break;
        }
        header.data_offset = offset;
    }
    let mut out = Vec::with_capacity(line.len() + 1 + 16 * values.len());
    out.extend_from_slice(line.as_bytes());
    out.push(b'\n');
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    Ok(out)
}

/// Splits a flat file into its header and values.
pub fn read_flat_binary(bytes: &[u8]) -> Result<(serde_json::Value, Vec<Complex64>)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::invalid("flat file has no header line"))?;
    let header: serde_json::Value = serde_json::from_slice(&bytes[..nl])?;
    let body = &bytes[nl + 1..];
    if body.len() % 16 != 0 {
        return Err(Error::invalid("flat file body is not a whole number of complex values"));
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8 bytes"));
    Ok((header, body.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect()))
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `<= 0.005`.
    pub rule: String,
    pub pass: bool,
}

impl Certificate {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, rule: format!("<= {}", fmt_f64(bound)), pass: value <= bound }
    }

    pub fn holds(name: impl Into<String>, value: f64, rule: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), value, rule: rule.into(), pass }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Vec<FileDigest>,
    pub parameters: serde_json::Value,
    pub tolerances: serde_json::Value,
    pub certificates: Vec<Certificate>,
    pub outputs: Vec<FileDigest>,
    pub pass: bool,
}

/// Files produced by a run, held in memory until committed.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((path.into(), bytes));
    }

    pub fn digests(&self) -> Vec<FileDigest> {
        self.files.iter().map(|(p, b)| FileDigest { path: p.display().to_string(), sha256: sha256_hex(b) }).collect()
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn get(&self, path: &Path) -> Option<&[u8]> {
        self.files.iter().find(|(p, _)| p == path).map(|(_, b)| b.as_slice())
    }

    /// Writes every file through a temporary sibling and a rename.
    pub fn commit(&self) -> Result<()> {
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let mut tmp = path.clone().into_os_string();
            tmp.push(".partial");
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, path)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        for v in [0.1, 1.0, -2.5e-300, std::f64::consts::PI, 1e21] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.1), "0.1");
    }

    #[test]
    fn flat_round_trip() {
        let h = FlatHeader {
            format: "test",
            dtype: "<f8",
            dims: vec![2],
            axes: vec!["x"],
            t: vec![],
            x: vec![],
            y: vec![],
            data_offset: 0,
        };
        let vals = [Complex64::new(1.0, -2.0), Complex64::new(0.5, 3.0)];
        let bytes = flat_binary(h, &vals).unwrap();
        let (head, back) = read_flat_binary(&bytes).unwrap();
        assert_eq!(back, vals);
        let off = head["data_offset"].as_u64().unwrap() as usize;
        assert_eq!(bytes.len() - off, 32);
    }

    #[test]
    fn points_with_header() {
        let p = read_points_csv("x_1,x_2\n1,2\n# note\n-0.5, 3e-1\n", 2).unwrap();
        assert_eq!(p, vec![vec![1.0, 2.0], vec![-0.5, 0.3]]);
        assert!(read_points_csv("1,2,3\n", 2).is_err());
        assert!(read_points_csv("1,a\n2,3\n", 2).is_ok());
        assert!(read_points_csv("1,2\n2,b\n", 2).is_err());
    }

    #[test]
    fn sha_of_empty() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
