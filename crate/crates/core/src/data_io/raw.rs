//! Header-less little-endian `f64` matrices with a text sidecar.
//!
//! The matrix file holds `n_rows · n_cols` little-endian `f64` values in
//! row-major order, followed (when `labels=true`) by `n_rows` little-endian
//! `u64` labels. The sidecar is a `key=value` text file with at least
//! `n_rows`, `n_cols` and `labels`; any other keys are carried through as
//! metadata.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::matrix::{DataMatrix, LabelVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sidecar {
    pub n_rows: usize,
    pub n_cols: usize,
    pub labels: bool,
    pub extra: BTreeMap<String, String>,
}

impl Sidecar {
    pub fn new(n_rows: usize, n_cols: usize, labels: bool) -> Self {
        Self {
            n_rows,
            n_cols,
            labels,
            extra: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.extra.insert(key.to_string(), value.to_string());
        self
    }

    pub fn expected_bytes(&self) -> u64 {
        let cells = self.n_rows as u64 * self.n_cols as u64;
        8 * (cells + if self.labels { self.n_rows as u64 } else { 0 })
    }

    pub fn render(&self) -> String {
        let mut s = format!(
            "n_rows={}\nn_cols={}\nlabels={}\n",
            self.n_rows, self.n_cols, self.labels
        );
        for (k, v) in &self.extra {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// Accepts `key=value` or `key: value` lines; blank lines and `#`
    /// comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_key_values(text)?;
        let field = |k: &str| {
            pairs
                .get(k)
                .ok_or_else(|| Error::Format(format!("sidecar is missing `{k}`")))
        };
        let count = |k: &str| -> Result<usize> {
            field(k)?
                .parse()
                .map_err(|_| Error::Format(format!("sidecar `{k}` is not a count")))
        };
        let labels = match field("labels")?.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(Error::Format(format!("sidecar `labels` must be true/false, got `{other}`"))),
        };
        let extra = pairs
            .iter()
            .filter(|(k, _)| !matches!(k.as_str(), "n_rows" | "n_cols" | "labels"))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(Self {
            n_rows: count("n_rows")?,
            n_cols: count("n_cols")?,
            labels,
            extra,
        })
    }
}

pub(crate) fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| Error::Format(format!("line {}: expected key=value", lineno + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Conventional sidecar location: the matrix path with `.meta` appended.
pub fn default_sidecar_path(matrix_path: &Path) -> PathBuf {
    let mut s = matrix_path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn encode_raw(x: &DataMatrix, labels: Option<&LabelVector>) -> Vec<u8> {
    let n_labels = labels.map_or(0, LabelVector::len);
    let mut out = Vec::with_capacity(8 * (x.values().len() + n_labels));
    for v in x.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if let Some(l) = labels {
        for v in l.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_raw(bytes: &[u8], sidecar: &Sidecar) -> Result<(DataMatrix, Option<LabelVector>)> {
    let expected = sidecar.expected_bytes();
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            expected,
            found: bytes.len() as u64,
        });
    }
    let cells = sidecar.n_rows * sidecar.n_cols;
    let (matrix_bytes, label_bytes) = bytes.split_at(cells * 8);
    let values: Vec<f64> = matrix_bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let x = DataMatrix::new(sidecar.n_rows, sidecar.n_cols, values)?;
    let labels = sidecar.labels.then(|| {
        LabelVector::new(
            label_bytes
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect(),
        )
    });
    Ok((x, labels))
}

pub fn write_raw_with(
    matrix_path: &Path,
    sidecar_path: &Path,
    x: &DataMatrix,
    labels: Option<&LabelVector>,
    sidecar: &Sidecar,
) -> Result<()> {
    if let Some(l) = labels {
        l.check_aligned(x.n_rows())?;
    }
    fs::write(matrix_path, encode_raw(x, labels)).map_err(|e| Error::io(matrix_path, e))?;
    fs::write(sidecar_path, sidecar.render()).map_err(|e| Error::io(sidecar_path, e))
}

pub fn write_raw(
    matrix_path: &Path,
    sidecar_path: &Path,
    x: &DataMatrix,
    labels: Option<&LabelVector>,
) -> Result<()> {
    let sidecar = Sidecar::new(x.n_rows(), x.n_cols(), labels.is_some());
    write_raw_with(matrix_path, sidecar_path, x, labels, &sidecar)
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Sidecar::parse(&text)
}

pub fn load_raw(matrix_path: &Path, sidecar_path: &Path) -> Result<(DataMatrix, Option<LabelVector>)> {
    let sidecar = read_sidecar(sidecar_path)?;
    let bytes = fs::read(matrix_path).map_err(|e| Error::io(matrix_path, e))?;
    decode_raw(&bytes, &sidecar)
}
