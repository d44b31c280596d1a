use rayon::prelude::*;

use crate::data_io::DataMatrix;
use crate::error::{Error, Result};

/// Dense `n × n` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SquareMatrix {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n}x{n} matrix",
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Pairwise squared Euclidean distances via `‖a‖² + ‖b‖² − 2a·b`, clamped at
/// zero. Only the upper triangle is computed; the lower is mirrored.
pub fn squared_distances(x: &DataMatrix) -> Result<SquareMatrix> {
    let n = x.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let norms: Vec<f64> = x.rows().map(|r| dot(r, r)).collect();
    if let Some(i) = norms.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            (i + 1..n)
                .map(|j| (norms[i] + norms[j] - 2.0 * dot(xi, x.row(j))).max(0.0))
                .collect()
        })
        .collect();
    let mut out = SquareMatrix::zeros(n);
    for (i, row) in upper.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + 1 + offset;
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(out)
}

/// Squared distances from row `i` to every row (the entry for `i` itself is 0).
pub(crate) fn distances_from(x: &DataMatrix, norms: &[f64], i: usize) -> Vec<f64> {
    let xi = x.row(i);
    (0..x.n_rows())
        .map(|j| {
            if j == i {
                0.0
            } else {
                (norms[i] + norms[j] - 2.0 * dot(xi, x.row(j))).max(0.0)
            }
        })
        .collect()
}

pub(crate) fn row_norms(x: &DataMatrix) -> Vec<f64> {
    x.rows().map(|r| dot(r, r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn three_four_five() {
        let x = DataMatrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        let d = squared_distances(&x).unwrap();
        assert_eq!(d.values(), &[0.0, 25.0, 25.0, 0.0]);
    }

    #[test]
    fn matches_two_loop_oracle() {
        let mut rng = SeededRng::new(8);
        let x = DataMatrix::new(6, 4, (0..24).map(|_| rng.standard_normal() * 3.0).collect()).unwrap();
        let d = squared_distances(&x).unwrap();
        for i in 0..6 {
            assert_eq!(d.get(i, i), 0.0);
            for j in 0..6 {
                let naive: f64 = (0..4).map(|k| (x.get(i, k) - x.get(j, k)).powi(2)).sum();
                assert!((d.get(i, j) - naive).abs() <= 1e-10);
                assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
        let norms = row_norms(&x);
        assert_eq!(distances_from(&x, &norms, 2), d.row(2));
    }

    #[test]
    fn duplicates_clamp_to_zero() {
        let x = DataMatrix::from_rows(&[vec![0.1, 0.7, 1e3], vec![0.1, 0.7, 1e3], vec![0.0, 0.0, 0.0]]).unwrap();
        let d = squared_distances(&x).unwrap();
        assert!(d.get(0, 1) >= 0.0 && d.get(0, 1) < 1e-9);
    }
}
