use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::data_io::DataMatrix;
use crate::error::{param, Error, Result};

/// Principal axes of a dataset.
///
/// `components` is `d × d_prime` row-major with orthonormal columns;
/// `explained_variance` holds the matching sample-covariance eigenvalues
/// (denominator `N - 1`), non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalBasis {
    pub mean: Vec<f64>,
    pub components: Vec<f64>,
    pub explained_variance: Vec<f64>,
}

impl PrincipalBasis {
    pub fn d(&self) -> usize {
        self.mean.len()
    }

    pub fn d_prime(&self) -> usize {
        self.explained_variance.len()
    }

    #[inline]
    pub fn component(&self, row: usize, col: usize) -> f64 {
        self.components[row * self.d_prime() + col]
    }

    /// Packs the basis as a `(d_prime + 2) × d` matrix: the mean, one row per
    /// component, then the explained variances zero-padded to width `d`.
    pub fn to_matrix(&self) -> Result<DataMatrix> {
        let (d, k) = (self.d(), self.d_prime());
        let mut values = self.mean.clone();
        for c in 0..k {
            values.extend((0..d).map(|r| self.component(r, c)));
        }
        values.extend(&self.explained_variance);
        values.resize((k + 2) * d, 0.0);
        DataMatrix::new(k + 2, d, values)
    }

    pub fn from_matrix(m: &DataMatrix) -> Result<Self> {
        let d = m.n_cols();
        let k = m.n_rows() - 2;
        if k == 0 || k > d {
            return Err(Error::Format("packed basis has no components".into()));
        }
        let mut components = vec![0.0; d * k];
        for c in 0..k {
            for (r, &v) in m.row(c + 1).iter().enumerate() {
                components[r * k + c] = v;
            }
        }
        Ok(Self {
            mean: m.row(0).to_vec(),
            components,
            explained_variance: m.row(k + 1)[..k].to_vec(),
        })
    }
}

fn centered(x: &DataMatrix, mean: &[f64]) -> DMatrix<f64> {
    let (n, d) = (x.n_rows(), x.n_cols());
    DMatrix::from_fn(n, d, |i, j| x.get(i, j) - mean[j])
}

/// Sorts eigenpairs by descending eigenvalue and keeps the top `k`.
fn top_pairs(eig: &SymmetricEigen<f64, nalgebra::Dyn>, k: usize) -> Vec<(f64, usize)> {
    let mut order: Vec<(f64, usize)> = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    order.truncate(k);
    order
}

/// Fits the top-`d_prime` principal axes.
///
/// Uses the `d × d` covariance when `d ≤ N`, otherwise the `N × N` Gram
/// matrix of the centered rows. Negative round-off eigenvalues are clamped
/// to zero, and each axis is signed so its largest-magnitude entry is
/// positive.
pub fn pca_fit(x: &DataMatrix, d_prime: usize) -> Result<PrincipalBasis> {
    let (n, d) = (x.n_rows(), x.n_cols());
    if d_prime == 0 || d_prime > n.min(d) {
        return Err(param(format!(
            "PCA dimension {d_prime} must lie in 1..={}",
            n.min(d)
        )));
    }
    let mut mean = vec![0.0; d];
    for row in x.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let xc = centered(x, &mean);
    let denom = (n - 1) as f64;
    let mut components = vec![0.0; d * d_prime];
    let mut explained_variance = Vec::with_capacity(d_prime);

    if d <= n {
        let cov = xc.tr_mul(&xc) / denom;
        let eig = cov
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("covariance eigensolver did not converge".into()))?;
        for (c, (value, idx)) in top_pairs(&eig, d_prime).into_iter().enumerate() {
            explained_variance.push(value.max(0.0));
            for r in 0..d {
                components[r * d_prime + c] = eig.eigenvectors[(r, idx)];
            }
        }
    } else {
        let gram = (&xc * xc.transpose()) / denom;
        let eig = gram
            .try_symmetric_eigen(f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("Gram eigensolver did not converge".into()))?;
        let pairs = top_pairs(&eig, d_prime);
        let largest = pairs[0].0.max(0.0);
        for (c, (value, idx)) in pairs.into_iter().enumerate() {
            if value <= largest * 1e-12 || value <= 0.0 {
                return Err(param(format!(
                    "PCA dimension {d_prime} exceeds the numerical rank of the centered data"
                )));
            }
            explained_variance.push(value);
            // v = Xcᵀ u / sqrt((N-1) λ)
            let u = eig.eigenvectors.column(idx);
            let v = xc.tr_mul(&u) / (denom * value).sqrt();
            for r in 0..d {
                components[r * d_prime + c] = v[r];
            }
        }
    }

    for c in 0..d_prime {
        let mut best = 0;
        for r in 1..d {
            if components[r * d_prime + c].abs() > components[best * d_prime + c].abs() {
                best = r;
            }
        }
        if components[best * d_prime + c] < 0.0 {
            for r in 0..d {
                components[r * d_prime + c] = -components[r * d_prime + c];
            }
        }
    }

    Ok(PrincipalBasis {
        mean,
        components,
        explained_variance,
    })
}

/// `(X − mean) · components`.
pub fn pca_transform(x: &DataMatrix, basis: &PrincipalBasis) -> Result<DataMatrix> {
    let (d, k) = (basis.d(), basis.d_prime());
    if x.n_cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "data has {} columns, basis expects {d}",
            x.n_cols()
        )));
    }
    let mut out = vec![0.0; x.n_rows() * k];
    out.par_chunks_mut(k).enumerate().for_each(|(i, dst)| {
        for (r, (&xv, &m)) in x.row(i).iter().zip(&basis.mean).enumerate() {
            let centered = xv - m;
            let comp = &basis.components[r * k..(r + 1) * k];
            for (o, &cv) in dst.iter_mut().zip(comp) {
                *o += centered * cv;
            }
        }
    });
    DataMatrix::new(x.n_rows(), k, out)
}
