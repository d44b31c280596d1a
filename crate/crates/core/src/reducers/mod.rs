//! Dimensionality reduction applied ahead of t-SNE.

mod jl;
mod pca;
mod projection;

use std::fmt;
use std::str::FromStr;

pub use jl::{jl_audit, jl_audit_scaled, JlAudit};
pub use pca::{pca_fit, pca_transform, PrincipalBasis};
pub use projection::{apply_projection, gaussian_projection, ProjectionMatrix};

use crate::data_io::DataMatrix;
use crate::error::{param, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReducerKind {
    None,
    RandomProjection,
    Pca,
}

impl ReducerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReducerKind::None => "none",
            ReducerKind::RandomProjection => "random_projection",
            ReducerKind::Pca => "pca",
        }
    }

    /// Stable numeric tag used when deriving per-run seeds.
    pub fn tag(self) -> u64 {
        match self {
            ReducerKind::None => 0,
            ReducerKind::RandomProjection => 1,
            ReducerKind::Pca => 2,
        }
    }
}

impl fmt::Display for ReducerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReducerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(ReducerKind::None),
            "random_projection" | "rp" => Ok(ReducerKind::RandomProjection),
            "pca" => Ok(ReducerKind::Pca),
            other => Err(param(format!("unknown reducer `{other}`"))),
        }
    }
}

/// Reduces `x` to `d_prime` columns with the given reducer. `seed` only
/// matters for random projections; `None` requires `d_prime == d`.
pub fn reduce(x: &DataMatrix, kind: ReducerKind, d_prime: usize, seed: u64) -> Result<DataMatrix> {
    match kind {
        ReducerKind::None => {
            if d_prime != x.n_cols() {
                return Err(param("identity reducer keeps the input dimension"));
            }
            Ok(x.clone())
        }
        ReducerKind::RandomProjection => {
            let r = gaussian_projection(x.n_cols(), d_prime, seed)?;
            apply_projection(x, &r)
        }
        ReducerKind::Pca => pca_transform(x, &pca_fit(x, d_prime)?),
    }
}
