//! Feature and label file formats.
//!
//! CSV features: one sample per line, `m` comma-separated floats, no header.
//! CSV labels: one integer per line, `-1` for unlabeled.
//!
//! Binary features: `SPTF`, u32 version (1), u64 n, u64 m, then `n*m`
//! little-endian f64 in sample-major order. Binary labels: `SPTL`, u32
//! version (1), u64 n, then `n` little-endian i64.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

pub const FEATURES_MAGIC: &[u8; 4] = b"SPTF";
pub const LABELS_MAGIC: &[u8; 4] = b"SPTL";
pub const FORMAT_VERSION: u32 = 1;
const UNLABELED: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Binary,
}

impl Format {
    /// Binary if the file starts with one of the binary magics, CSV otherwise.
    pub fn detect(path: &Path) -> Result<Self, DataError> {
        let bytes = read(path)?;
        Ok(
            if bytes.starts_with(FEATURES_MAGIC) || bytes.starts_with(LABELS_MAGIC) {
                Format::Binary
            } else {
                Format::Csv
            },
        )
    }
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "binary" | "bin" => Ok(Self::Binary),
            _ => Err(format!("unknown format {s:?} (expected csv or binary)")),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    fs::write(path, bytes).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_features(path: &Path, format: Format) -> Result<Dataset, DataError> {
    let bytes = read(path)?;
    let features = match format {
        Format::Csv => parse_csv_features(&String::from_utf8_lossy(&bytes))?,
        Format::Binary => decode_binary_features(&bytes)?,
    };
    Dataset::new(features)
}

pub fn save_features(
    features: &DMatrix<f64>,
    path: &Path,
    format: Format,
) -> Result<(), DataError> {
    let bytes = match format {
        Format::Csv => encode_csv_features(features).into_bytes(),
        Format::Binary => encode_binary_features(features),
    };
    write(path, &bytes)
}

pub fn load_labels(path: &Path, format: Format) -> Result<Vec<Option<usize>>, DataError> {
    let bytes = read(path)?;
    let raw = match format {
        Format::Csv => parse_csv_labels(&String::from_utf8_lossy(&bytes))?,
        Format::Binary => decode_binary_labels(&bytes)?,
    };
    raw.into_iter()
        .enumerate()
        .map(|(i, l)| match l {
            UNLABELED => Ok(None),
            l if l >= 0 => Ok(Some(l as usize)),
            l => Err(DataError::ClassOutOfRange {
                index: i,
                label: l,
                class_count: 0,
            }),
        })
        .collect()
}

pub fn save_labels(labels: &[Option<usize>], path: &Path, format: Format) -> Result<(), DataError> {
    let raw: Vec<i64> = labels
        .iter()
        .map(|l| l.map_or(UNLABELED, |c| c as i64))
        .collect();
    let bytes = match format {
        Format::Csv => {
            let mut s = String::with_capacity(raw.len() * 3);
            for l in raw {
                s.push_str(&l.to_string());
                s.push('\n');
            }
            s.into_bytes()
        }
        Format::Binary => {
            let mut out = Vec::with_capacity(16 + 8 * raw.len());
            out.extend_from_slice(LABELS_MAGIC);
            out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
            out.extend_from_slice(&(raw.len() as u64).to_le_bytes());
            for l in raw {
                out.extend_from_slice(&l.to_le_bytes());
            }
            out
        }
    };
    write(path, &bytes)
}

/// Convenience for fully-labeled vectors.
pub fn save_dense_labels(labels: &[usize], path: &Path, format: Format) -> Result<(), DataError> {
    let wrapped: Vec<Option<usize>> = labels.iter().map(|&l| Some(l)).collect();
    save_labels(&wrapped, path, format)
}

/// Serialize a boolean mask as `0`/`1` lines.
pub fn save_mask(mask: &[bool], path: &Path) -> Result<(), DataError> {
    let mut buf = Vec::with_capacity(mask.len() * 2);
    for &b in mask {
        writeln!(buf, "{}", u8::from(b)).expect("write to Vec");
    }
    write(path, &buf)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_csv_features(text: &str) -> Result<DMatrix<f64>, DataError> {
    let mut values = Vec::new();
    let mut m = None;
    let mut n = 0;
    for (row, line) in data_lines(text) {
        let start = values.len();
        for (c, field) in line.split(',').enumerate() {
            let field = field.trim();
            let v: f64 = field.parse().map_err(|_| DataError::Parse {
                row,
                col: c + 1,
                text: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFiniteValue { row, col: c + 1 });
            }
            values.push(v);
        }
        let found = values.len() - start;
        match m {
            None => m = Some(found),
            Some(expected) if expected != found => {
                return Err(DataError::DimensionMismatch {
                    row,
                    expected,
                    found,
                })
            }
            _ => {}
        }
        n += 1;
    }
    // Each line is one column of the m x n matrix.
    Ok(DMatrix::from_vec(m.unwrap_or(0), n, values))
}

fn encode_csv_features(features: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for col in features.column_iter() {
        let fields: Vec<String> = col.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

fn parse_csv_labels(text: &str) -> Result<Vec<i64>, DataError> {
    data_lines(text)
        .map(|(row, line)| {
            line.parse::<i64>().map_err(|_| DataError::Parse {
                row,
                col: 1,
                text: line.to_string(),
            })
        })
        .collect()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let out = self.bytes.get(self.pos..self.pos + N)?.try_into().ok()?;
        self.pos += N;
        Some(out)
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<(), DataError> {
        let got = self
            .take::<4>()
            .ok_or_else(|| DataError::MalformedHeader("missing magic".into()))?;
        if &got != magic {
            return Err(DataError::MalformedHeader(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&got),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self
            .take::<4>()
            .map(u32::from_le_bytes)
            .ok_or_else(|| DataError::MalformedHeader("missing version".into()))?;
        if version != FORMAT_VERSION {
            return Err(DataError::MalformedHeader(format!(
                "unsupported version {version}"
            )));
        }
        Ok(())
    }

    fn u64_field(&mut self, name: &str) -> Result<usize, DataError> {
        self.take::<8>()
            .map(|b| u64::from_le_bytes(b) as usize)
            .ok_or_else(|| DataError::MalformedHeader(format!("missing {name}")))
    }

    fn payload(&self, expected: usize) -> Result<&'a [u8], DataError> {
        let rest = &self.bytes[self.pos..];
        if rest.len() != expected {
            return Err(DataError::Truncated {
                expected,
                found: rest.len(),
            });
        }
        Ok(rest)
    }
}

fn decode_binary_features(bytes: &[u8]) -> Result<DMatrix<f64>, DataError> {
    let mut r = Reader { bytes, pos: 0 };
    r.header(FEATURES_MAGIC)?;
    let n = r.u64_field("n")?;
    let m = r.u64_field("m")?;
    let len = n
        .checked_mul(m)
        .and_then(|k| k.checked_mul(8))
        .ok_or_else(|| DataError::MalformedHeader(format!("n={n}, m={m} overflows")))?;
    let payload = r.payload(len)?;
    let mut values = Vec::with_capacity(n * m);
    for (k, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
        if !v.is_finite() {
            return Err(DataError::NonFiniteValue {
                row: k / m + 1,
                col: k % m + 1,
            });
        }
        values.push(v);
    }
    Ok(DMatrix::from_vec(m, n, values))
}

fn encode_binary_features(features: &DMatrix<f64>) -> Vec<u8> {
    let (m, n) = features.shape();
    let mut out = Vec::with_capacity(24 + 8 * m * n);
    out.extend_from_slice(FEATURES_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(m as u64).to_le_bytes());
    // Column-major storage is sample-major for column-per-sample features.
    for v in features.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_binary_labels(bytes: &[u8]) -> Result<Vec<i64>, DataError> {
    let mut r = Reader { bytes, pos: 0 };
    r.header(LABELS_MAGIC)?;
    let n = r.u64_field("n")?;
    let len = n
        .checked_mul(8)
        .ok_or_else(|| DataError::MalformedHeader(format!("n={n} overflows")))?;
    let payload = r.payload(len)?;
    Ok(payload
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str, bytes: &[u8]) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join(name);
        fs::write(&p, bytes).unwrap();
        (dir, p)
    }

    #[test]
    fn csv_zeros() {
        let (_d, p) = tmp("x.csv", b"0,0\n0,0\n0,0\n");
        let ds = load_features(&p, Format::Csv).unwrap();
        assert_eq!((ds.dim(), ds.len()), (2, 3));
        assert!(ds.features().iter().all(|&v| v == 0.0));
        assert!(ds.labels().is_none());
    }

    #[test]
    fn csv_nan_reports_position() {
        let (_d, p) = tmp("x.csv", b"1,2\n3,nan\n");
        let err = load_features(&p, Format::Csv).unwrap_err();
        assert!(
            matches!(err, DataError::NonFiniteValue { row: 2, col: 2 }),
            "{err:?}"
        );
    }

    #[test]
    fn csv_ragged_and_garbage() {
        let (_d, p) = tmp("x.csv", b"1,2\n3\n");
        assert!(matches!(
            load_features(&p, Format::Csv),
            Err(DataError::DimensionMismatch {
                row: 2,
                expected: 2,
                found: 1
            })
        ));
        let (_d, p) = tmp("x.csv", b"a,b\n1,2\n");
        assert!(matches!(
            load_features(&p, Format::Csv),
            Err(DataError::Parse { row: 1, col: 1, .. })
        ));
    }

    #[test]
    fn binary_layout() {
        let mut bytes = b"SPTF".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&4u64.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        for k in 0..8 {
            bytes.extend_from_slice(&(k as f64).to_le_bytes());
        }
        let (_d, p) = tmp("x.sptf", &bytes);
        assert_eq!(Format::detect(&p).unwrap(), Format::Binary);
        let ds = load_features(&p, Format::Binary).unwrap();
        assert_eq!((ds.dim(), ds.len()), (2, 4));
        // sample 1 is the second pair of values
        assert_eq!(ds.features()[(0, 1)], 2.0);
        assert_eq!(ds.features()[(1, 1)], 3.0);
    }

    #[test]
    fn binary_header_errors() {
        let (_d, p) = tmp("x.sptf", b"NOPE\x01\x00\x00\x00");
        assert!(matches!(
            load_features(&p, Format::Binary),
            Err(DataError::MalformedHeader(_))
        ));
        let mut bytes = b"SPTF".to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&1f64.to_le_bytes());
        let (_d, p) = tmp("x.sptf", &bytes);
        assert!(matches!(
            load_features(&p, Format::Binary),
            Err(DataError::Truncated { .. })
        ));
    }

    #[test]
    fn labels_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let labels = vec![Some(0), None, Some(4)];
        for (name, f) in [("l.txt", Format::Csv), ("l.sptl", Format::Binary)] {
            let p = dir.path().join(name);
            save_labels(&labels, &p, f).unwrap();
            assert_eq!(Format::detect(&p).unwrap(), f);
            assert_eq!(load_labels(&p, f).unwrap(), labels);
        }
        let p = dir.path().join("bad.txt");
        fs::write(&p, "0\n-3\n").unwrap();
        assert!(load_labels(&p, Format::Csv).is_err());
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_features(Path::new("/nonexistent/x.csv"), Format::Csv).unwrap_err();
        assert!(matches!(err, DataError::Io { .. }));
    }
}
