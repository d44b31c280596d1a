//! IDX reader/writer (the MNIST container).
//!
//! Headers are big-endian: a `u32` magic (`0x0803` for rank-3 `u8` images,
//! `0x0801` for rank-1 `u8` labels) followed by one `u32` per dimension.
//! Gzip-compressed files are recognised by their magic bytes and
//! decompressed transparently.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;

use super::matrix::{DataMatrix, LabelVector};
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

fn header_u32(bytes: &[u8], word: usize) -> Result<u32> {
    let start = word * 4;
    bytes
        .get(start..start + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format("IDX header shorter than its declared rank".into()))
}

/// Parses an image file into `(n_images, rows·cols, pixel bytes)`.
pub fn parse_images(bytes: &[u8]) -> Result<(usize, usize, &[u8])> {
    let magic = header_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "bad image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let n = header_u32(bytes, 1)? as usize;
    let rows = header_u32(bytes, 2)? as usize;
    let cols = header_u32(bytes, 3)? as usize;
    let payload = &bytes[16..];
    let expected = (n as u64) * (rows as u64) * (cols as u64);
    if payload.len() as u64 != expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len() as u64,
        });
    }
    Ok((n, rows * cols, payload))
}

pub fn parse_labels(bytes: &[u8]) -> Result<&[u8]> {
    let magic = header_u32(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format(format!(
            "bad label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let n = header_u32(bytes, 1)? as u64;
    let payload = &bytes[8..];
    if payload.len() as u64 != n {
        return Err(Error::Truncated {
            expected: n,
            found: payload.len() as u64,
        });
    }
    Ok(payload)
}

/// Loads an IDX image/label pair, one flattened image per row.
/// With `normalize`, bytes are divided by 255.
pub fn load_idx(
    images_path: &Path,
    labels_path: &Path,
    normalize: bool,
) -> Result<(DataMatrix, LabelVector)> {
    let image_bytes = read_file(images_path)?;
    let label_bytes = read_file(labels_path)?;
    let (n, dim, pixels) = parse_images(&image_bytes)?;
    let labels = parse_labels(&label_bytes)?;
    if labels.len() != n {
        return Err(Error::Alignment {
            images: n,
            labels: labels.len(),
        });
    }
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let scale = if normalize { 255.0 } else { 1.0 };
    let values = pixels.iter().map(|&b| f64::from(b) / scale).collect();
    let x = DataMatrix::new(n, dim, values)?;
    let y = LabelVector::new(labels.iter().map(|&l| u64::from(l)).collect());
    Ok((x, y))
}

/// Encodes images (`u8` pixels, `n × rows × cols`) as an uncompressed IDX file.
pub fn encode_images(n: usize, rows: usize, cols: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), n * rows * cols);
    let mut out = Vec::with_capacity(16 + pixels.len());
    for word in [IMAGES_MAGIC, n as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&word.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
