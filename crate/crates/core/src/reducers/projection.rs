use rayon::prelude::*;

use crate::data_io::DataMatrix;
use crate::error::{param, Error, Result};
use crate::rng::SeededRng;

/// Dense Gaussian map from `R^d` to `R^d_prime`, stored `d × d_prime` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    d: usize,
    d_prime: usize,
    seed: u64,
    entries: Vec<f64>,
}

impl ProjectionMatrix {
    /// Entries i.i.d. `N(0, 1/d)`, drawn row-major from [`SeededRng`].
    pub fn gaussian(d: usize, d_prime: usize, seed: u64) -> Result<Self> {
        if d_prime == 0 || d_prime > d {
            return Err(param(format!("projection dimension {d_prime} must lie in 1..={d}")));
        }
        let std = 1.0 / (d as f64).sqrt();
        let mut rng = SeededRng::new(seed);
        let entries = (0..d * d_prime).map(|_| std * rng.standard_normal()).collect();
        Ok(Self {
            d,
            d_prime,
            seed,
            entries,
        })
    }

    pub fn from_entries(d: usize, d_prime: usize, seed: u64, entries: Vec<f64>) -> Result<Self> {
        if d_prime == 0 || d_prime > d {
            return Err(param(format!("projection dimension {d_prime} must lie in 1..={d}")));
        }
        if entries.len() != d * d_prime {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {d}x{d_prime} projection",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("projection entries must be finite".into()));
        }
        Ok(Self {
            d,
            d_prime,
            seed,
            entries,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn d_prime(&self) -> usize {
        self.d_prime
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.d_prime + col]
    }

    /// Expected factor between original and projected squared distances,
    /// `d / d_prime`. Multiply projected squared distances by it to compare
    /// on the unit scale.
    pub fn distance_scale(&self) -> f64 {
        self.d as f64 / self.d_prime as f64
    }

    pub fn to_matrix(&self) -> Result<DataMatrix> {
        DataMatrix::new(self.d, self.d_prime, self.entries.clone())
    }
}

pub fn gaussian_projection(d: usize, d_prime: usize, seed: u64) -> Result<ProjectionMatrix> {
    ProjectionMatrix::gaussian(d, d_prime, seed)
}

/// `X · R`, computed row by row.
pub fn apply_projection(x: &DataMatrix, r: &ProjectionMatrix) -> Result<DataMatrix> {
    if x.n_cols() != r.d {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns, projection expects {}",
            x.n_cols(),
            r.d
        )));
    }
    let k = r.d_prime;
    let mut out = vec![0.0; x.n_rows() * k];
    out.par_chunks_mut(k).enumerate().for_each(|(i, dst)| {
        for (&xv, r_row) in x.row(i).iter().zip(r.entries.chunks_exact(k)) {
            if xv == 0.0 {
                continue;
            }
            for (o, &rv) in dst.iter_mut().zip(r_row) {
                *o += xv * rv;
            }
        }
    });
    DataMatrix::new(x.n_rows(), k, out)
}
