//! Matrix and label files.
//!
//! `rawbin` layout (all integers little-endian):
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 8    | magic `DVCRAWB\0`              |
//! | 8      | 4    | version (u32, currently 1)     |
//! | 12     | 1    | dtype code (1 = f32, 2 = f64)  |
//! | 13     | 8    | rows (u64)                     |
//! | 21     | 8    | cols (u64)                     |
//! | 29     | ...  | row-major IEEE-754 payload     |
//!
//! CSV files are plain comma-separated numbers with an optional header
//! row, detected by a non-numeric first token.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::check_finite;
use crate::error::{Error, Result};

pub const RAWBIN_MAGIC: [u8; 8] = *b"DVCRAWB\0";
pub const RAWBIN_VERSION: u32 = 1;
const HEADER_LEN: usize = 29;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Csv,
    Rawbin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    fn code(self) -> u8 {
        match self {
            Dtype::F32 => 1,
            Dtype::F64 => 2,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(Dtype::F32),
            2 => Some(Dtype::F64),
            _ => None,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

/// Header-level description of a matrix file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub format: MatrixFormat,
    pub path: PathBuf,
    pub dtype: Dtype,
    pub shape: (usize, usize),
}

impl MatrixFile {
    /// Read only as much of the file as needed to describe it.
    pub fn inspect(path: impl AsRef<Path>) -> Result<MatrixFile> {
        let path = path.as_ref();
        match detect_format(path)? {
            MatrixFormat::Rawbin => {
                let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
                let (dtype, rows, cols) = parse_header(&bytes, path)?;
                Ok(MatrixFile {
                    format: MatrixFormat::Rawbin,
                    path: path.to_path_buf(),
                    dtype,
                    shape: (rows, cols),
                })
            }
            MatrixFormat::Csv => {
                let m = read_csv(path)?;
                Ok(MatrixFile {
                    format: MatrixFormat::Csv,
                    path: path.to_path_buf(),
                    dtype: Dtype::F64,
                    shape: m.shape(),
                })
            }
        }
    }
}

fn detect_format(path: &Path) -> Result<MatrixFormat> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("csv") | Some("txt") | Some("tsv") => Ok(MatrixFormat::Csv),
        Some("bin") | Some("rawbin") => Ok(MatrixFormat::Rawbin),
        _ => {
            let mut head = [0u8; 8];
            let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
            let n = f.read(&mut head).map_err(|e| Error::io(path, e))?;
            if n == 8 && head == RAWBIN_MAGIC {
                Ok(MatrixFormat::Rawbin)
            } else {
                Ok(MatrixFormat::Csv)
            }
        }
    }
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<(Dtype, usize, usize)> {
    if bytes.len() < HEADER_LEN || bytes[..8] != RAWBIN_MAGIC {
        return Err(Error::UnknownFormat(format!(
            "{} does not start with the rawbin magic",
            path.display()
        )));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != RAWBIN_VERSION {
        return Err(Error::UnknownFormat(format!(
            "unsupported rawbin version {version}"
        )));
    }
    let dtype = Dtype::from_code(bytes[12])
        .ok_or_else(|| Error::UnknownFormat(format!("unknown dtype code {}", bytes[12])))?;
    let rows = u64::from_le_bytes(bytes[13..21].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[21..29].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(dtype.size()))
        .ok_or_else(|| Error::ShapeMismatch(format!("header shape ({rows}, {cols}) overflows")))?;
    let payload = bytes.len() - HEADER_LEN;
    if payload != expected {
        return Err(Error::ShapeMismatch(format!(
            "header shape ({rows}, {cols}) needs {expected} payload bytes, file has {payload}"
        )));
    }
    Ok((dtype, rows, cols))
}

fn read_rawbin(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (dtype, rows, cols) = parse_header(&bytes, path)?;
    let payload = &bytes[HEADER_LEN..];
    let values: Vec<f64> = match dtype {
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

fn read_csv(path: &Path) -> Result<DMatrix<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let ctx = path.display().to_string();
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(&ctx, e))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if i == 0 && record.get(0).is_some_and(|t| t.parse::<f64>().is_err()) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(Error::ShapeMismatch(format!(
                    "{ctx}: line {} has {} fields, expected {c}",
                    i + 1,
                    record.len()
                )))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(&ctx, format!("line {}: bad number {field:?}", i + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Read a matrix, choosing the format from the extension (`.csv`, `.bin`)
/// or, failing that, from the leading magic bytes.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    match detect_format(path)? {
        MatrixFormat::Rawbin => read_rawbin(path),
        MatrixFormat::Csv => read_csv(path),
    }
}

/// Write a finite matrix. Rawbin output is always f64.
pub fn write_matrix(matrix: &DMatrix<f64>, path: impl AsRef<Path>, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Rawbin => write_rawbin(matrix, path, Dtype::F64),
        MatrixFormat::Csv => write_csv(matrix, path.as_ref()),
    }
}

pub fn write_rawbin(matrix: &DMatrix<f64>, path: impl AsRef<Path>, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    check_finite(matrix)?;
    let (rows, cols) = matrix.shape();
    let mut buf = Vec::with_capacity(HEADER_LEN + rows * cols * dtype.size());
    buf.extend_from_slice(&RAWBIN_MAGIC);
    buf.extend_from_slice(&RAWBIN_VERSION.to_le_bytes());
    buf.push(dtype.code());
    buf.extend_from_slice(&(rows as u64).to_le_bytes());
    buf.extend_from_slice(&(cols as u64).to_le_bytes());
    for r in 0..rows {
        for c in 0..cols {
            match dtype {
                Dtype::F64 => buf.extend_from_slice(&matrix[(r, c)].to_le_bytes()),
                Dtype::F32 => buf.extend_from_slice(&(matrix[(r, c)] as f32).to_le_bytes()),
            }
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn write_csv(matrix: &DMatrix<f64>, path: &Path) -> Result<()> {
    check_finite(matrix)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in 0..matrix.nrows() {
        let line: Vec<String> = (0..matrix.ncols())
            .map(|c| format!("{:?}", matrix[(r, c)]))
            .collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One label per line; blank lines are skipped.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

pub fn write_labels<S: AsRef<str>>(labels: &[S], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for l in labels {
        text.push_str(l.as_ref());
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identity_round_trips_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let id = DMatrix::<f64>::identity(2, 2);
        for (name, fmt) in [("i.bin", MatrixFormat::Rawbin), ("i.csv", MatrixFormat::Csv)] {
            let p = dir.path().join(name);
            write_matrix(&id, &p, fmt).unwrap();
            assert_eq!(read_matrix(&p).unwrap(), id);
        }
    }

    #[test]
    fn pi_is_bit_exact_in_rawbin() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pi.bin");
        let m = DMatrix::from_element(1, 1, std::f64::consts::PI);
        write_matrix(&m, &p, MatrixFormat::Rawbin).unwrap();
        let back = read_matrix(&p).unwrap();
        assert_eq!(back[(0, 0)].to_bits(), std::f64::consts::PI.to_bits());
        let info = MatrixFile::inspect(&p).unwrap();
        assert_eq!(info.shape, (1, 1));
        assert_eq!(info.dtype, Dtype::F64);
    }

    #[test]
    fn large_random_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let mut rng = crate::seed::rng(11);
        let m = DMatrix::from_fn(1000, 50, |_, _| rng.random_range(-1e3..1e3) * rng.random::<f64>());
        write_matrix(&m, &p, MatrixFormat::Csv).unwrap();
        let back = read_matrix(&p).unwrap();
        let diff = (&back - &m).abs().max();
        assert!(diff < 1e-12, "max abs diff {diff}");
    }

    #[test]
    fn csv_header_detected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        fs::write(&p, "f0,f1,f2\n1,2,3\n4,5,6\n").unwrap();
        let m = read_matrix(&p).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]));
    }

    #[test]
    fn ragged_csv_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "1,2,3\n4,5\n").unwrap();
        assert!(matches!(read_matrix(&p), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn bad_magic_and_truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        fs::write(&p, b"NOTMAGIC0000000000000000000000000").unwrap();
        assert!(matches!(read_matrix(&p), Err(Error::UnknownFormat(_))));

        let m = DMatrix::from_element(3, 2, 1.5);
        write_matrix(&m, &p, MatrixFormat::Rawbin).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, bytes).unwrap();
        assert!(matches!(read_matrix(&p), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn f32_payload_reads_back_as_f64() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.bin");
        let m = DMatrix::from_row_slice(2, 2, &[0.5, -1.25, 3.0, 8.0]);
        write_rawbin(&m, &p, Dtype::F32).unwrap();
        assert_eq!(read_matrix(&p).unwrap(), m);
        assert_eq!(fs::metadata(&p).unwrap().len(), 29 + 16);
    }

    #[test]
    fn magic_sniffed_without_extension() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("noext");
        let m = DMatrix::from_element(2, 2, 2.0);
        write_matrix(&m, &p, MatrixFormat::Rawbin).unwrap();
        assert_eq!(read_matrix(&p).unwrap(), m);
    }

    #[test]
    fn non_finite_write_refused() {
        let dir = tempfile::tempdir().unwrap();
        let m = DMatrix::from_element(1, 2, f64::INFINITY);
        assert!(write_matrix(&m, dir.path().join("x.bin"), MatrixFormat::Rawbin).is_err());
    }
}
