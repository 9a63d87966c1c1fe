//! On-disk formats: coefficient JSON, node-field CSV, manifests, the lock.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wavefocus_core::{BallGrid, Complex64, ShCoefficients};

use crate::error::{CliError, CliResult};

pub const LOCK_FILE: &str = ".wavefocus.lock";

/// One `(ℓ, m)` coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    pub l: usize,
    pub m: i64,
    pub re: f64,
    pub im: f64,
}

pub fn coefficient_entries(c: &ShCoefficients) -> Vec<CoefficientEntry> {
    c.iter()
        .map(|(l, m, v)| CoefficientEntry {
            l,
            m,
            re: v.re,
            im: v.im,
        })
        .collect()
}

pub fn coefficients_from_entries(band: usize, entries: &[CoefficientEntry]) -> Result<ShCoefficients, String> {
    let mut c = ShCoefficients::zeros(band);
    for e in entries {
        if e.l > band || e.m.unsigned_abs() as usize > e.l {
            return Err(format!("coefficient ({}, {}) outside band {band}", e.l, e.m));
        }
        c.set(e.l, e.m, Complex64::new(e.re, e.im));
    }
    Ok(c)
}

/// `{"band", "coefficients": [{l, m, re, im}, ...]}`; absent entries are zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientFile {
    pub band: usize,
    #[serde(serialize_with = "ser_coeffs")]
    pub coefficients: ShCoefficients,
}

fn ser_coeffs<S: serde::Serializer>(c: &ShCoefficients, s: S) -> Result<S::Ok, S::Error> {
    coefficient_entries(c).serialize(s)
}

pub fn read_coefficients(path: &Path) -> CliResult<CoefficientFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
    let band = raw
        .get("band")
        .and_then(|b| b.as_u64())
        .ok_or_else(|| CliError::format(path, "missing integer \"band\""))? as usize;
    let entries: Vec<CoefficientEntry> = raw
        .get("coefficients")
        .cloned()
        .map(serde_json::from_value)
        .transpose()
        .map_err(|e| CliError::format(path, e.to_string()))?
        .ok_or_else(|| CliError::format(path, "missing \"coefficients\""))?;
    let coefficients = coefficients_from_entries(band, &entries).map_err(|m| CliError::format(path, m))?;
    Ok(CoefficientFile { band, coefficients })
}

/// Writes files into one directory and remembers their hashes.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileRecord {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_csv(&mut self, name: &str, table: &Table) -> CliResult<()> {
        self.write(name, &table.to_bytes())
    }

    pub fn files(&self) -> &[FileRecord] {
        &self.files
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A CSV table of numbers; `Display` of `f64` is the shortest round-trip form.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| v.to_string()).collect());
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.into_inner().expect("in-memory write")
    }
}

/// Columns of a CSV file by header name, parsed as floats.
pub struct CsvColumns {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    path: PathBuf,
}

impl CsvColumns {
    pub fn read(path: &Path) -> CliResult<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let header: Vec<String> = r
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let row = rec
                .iter()
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::format(path, format!("row {}: {e}", i + 2)))?;
            rows.push(row);
        }
        Ok(Self {
            header,
            rows,
            path: path.to_path_buf(),
        })
    }

    pub fn column(&self, name: &str) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::format(&self.path, format!("missing column \"{name}\"")))
    }

    /// First of `names` that is present.
    pub fn column_any(&self, names: &[&str]) -> CliResult<usize> {
        names
            .iter()
            .find_map(|n| self.header.iter().position(|h| h == n))
            .ok_or_else(|| CliError::format(&self.path, format!("missing column, expected one of {names:?}")))
    }

    pub fn values(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[col])
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    }
}

/// Node-field CSV columns of `q_field.csv`.
pub const Q_FIELD_HEADER: [&str; 8] = ["r", "theta", "phi", "re_q", "im_q", "abs_q", "re_denom", "im_denom"];

/// Read `q` and its denominators back, checking the nodes against `grid`.
pub fn read_q_field(path: &Path, grid: &BallGrid) -> CliResult<(Vec<Complex64>, Vec<Complex64>)> {
    let t = CsvColumns::read(path)?;
    let cols: Vec<usize> = Q_FIELD_HEADER.iter().map(|h| t.column(h)).collect::<CliResult<_>>()?;
    if t.rows.len() != grid.len() {
        return Err(CliError::format(
            path,
            format!("{} rows for a grid of {} nodes", t.rows.len(), grid.len()),
        ));
    }
    let mut q = Vec::with_capacity(grid.len());
    let mut d = Vec::with_capacity(grid.len());
    for (i, row) in t.rows.iter().enumerate() {
        let (r, th, ph) = grid.spherical(i);
        let scale = 1e-12 * (1.0 + grid.radius());
        if (row[cols[0]] - r).abs() > scale || (row[cols[1]] - th).abs() > 1e-12 || (row[cols[2]] - ph).abs() > 1e-12 {
            return Err(CliError::format(
                path,
                format!("node {i} does not match the configured ball grid"),
            ));
        }
        q.push(Complex64::new(row[cols[3]], row[cols[4]]));
        d.push(Complex64::new(row[cols[6]], row[cols[7]]));
    }
    Ok((q, d))
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked(dir.to_path_buf())),
            Err(e) => Err(CliError::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_entries_round_trip() {
        let mut c = ShCoefficients::zeros(3);
        c.set(2, -1, Complex64::new(0.1, -0.3));
        c.set(3, 3, Complex64::new(1e-17, 2.5));
        let file = CoefficientFile {
            band: 3,
            coefficients: c.clone(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, serde_json::to_string(&file).unwrap()).unwrap();
        let back = read_coefficients(&p).unwrap();
        assert_eq!(back.band, 3);
        assert_eq!(back.coefficients, c);
    }

    #[test]
    fn out_of_band_coefficients_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(
            &p,
            r#"{"band": 1, "coefficients": [{"l": 2, "m": 0, "re": 1.0, "im": 0.0}]}"#,
        )
        .unwrap();
        assert!(matches!(read_coefficients(&p), Err(CliError::Format { .. })));
    }

    #[test]
    fn floats_round_trip_through_csv() {
        let mut t = Table::new(&["a", "b"]);
        let v = [0.1 + 0.2, 1.0 / 3.0];
        t.push_f64(&v);
        let text = String::from_utf8(t.to_bytes()).unwrap();
        let line = text.lines().nth(1).unwrap();
        let back: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(back, v);
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let a = DirLock::acquire(dir.path()).unwrap();
        assert!(matches!(DirLock::acquire(dir.path()), Err(CliError::Locked(_))));
        drop(a);
        assert!(DirLock::acquire(dir.path()).is_ok());
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
