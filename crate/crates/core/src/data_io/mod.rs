//! Dataset loading, subsampling and persistence.

mod csv_format;
pub mod idx;
mod matrix;
pub mod raw;
mod subsample;

use std::path::PathBuf;

pub use csv_format::load_csv;
pub use idx::load_idx;
pub use matrix::{DataMatrix, LabelVector};
pub use raw::{default_sidecar_path, load_raw, write_raw, Sidecar};
pub use subsample::{subsample, subsample_indices};

use crate::error::{param, Error, Result};

/// Where a dataset lives and how to read it.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Idx { images: PathBuf, labels: PathBuf },
    Raw { matrix: PathBuf, sidecar: PathBuf },
    Csv { path: PathBuf, has_header: bool, label_last: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub source: DataSource,
    pub subsample_size: Option<usize>,
    /// Divide IDX bytes by 255. Ignored for raw and CSV inputs.
    pub normalize: bool,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(source: DataSource) -> Self {
        Self {
            source,
            subsample_size: None,
            normalize: true,
            seed: 0,
        }
    }

    /// Loads, then subsamples when requested. Labels are mandatory.
    pub fn load(&self) -> Result<(DataMatrix, LabelVector)> {
        let (x, y) = match &self.source {
            DataSource::Idx { images, labels } => load_idx(images, labels, self.normalize)?,
            DataSource::Raw { matrix, sidecar } => {
                let (x, y) = load_raw(matrix, sidecar)?;
                (x, y.ok_or_else(|| Error::Format("raw dataset has no labels".into()))?)
            }
            DataSource::Csv {
                path,
                has_header,
                label_last,
            } => {
                if !label_last {
                    return Err(param("benchmark datasets need a label column"));
                }
                let (x, y) = load_csv(path, *has_header, true)?;
                (x, y.expect("label column requested"))
            }
        };
        y.check_aligned(x.n_rows())?;
        match self.subsample_size {
            Some(m) if m < x.n_rows() => subsample(&x, &y, m, self.seed),
            Some(m) if m > x.n_rows() => Err(param(format!(
                "subsample size {m} exceeds dataset size {}",
                x.n_rows()
            ))),
            _ => Ok((x, y)),
        }
    }
}
