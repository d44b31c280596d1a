//! Student-t output kernel, KL objective and its exact gradient.

use rayon::prelude::*;

use super::affinity::AffinityMatrix;
use super::distances::SquareMatrix;
use crate::data_io::DataMatrix;
use crate::error::{Error, Result};

/// Low-dimensional coordinates, `n × dims` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    n: usize,
    dims: usize,
    coords: Vec<f64>,
}

impl Embedding {
    pub fn new(n: usize, dims: usize, coords: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewRows(n));
        }
        if dims == 0 || coords.len() != n * dims {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for {n} points in {dims} dimensions",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dims,
                col: pos % dims,
            });
        }
        Ok(Self { n, dims, coords })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dims..(i + 1) * self.dims]
    }

    pub fn to_matrix(&self) -> DataMatrix {
        DataMatrix::new(self.n, self.dims, self.coords.clone()).expect("embedding is a valid matrix")
    }

    pub fn from_matrix(m: &DataMatrix) -> Result<Self> {
        Self::new(m.n_rows(), m.n_cols(), m.values().to_vec())
    }

    /// Applies `f` to every point; used for rigid-motion checks.
    pub fn map_points(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let coords: Vec<f64> = (0..self.n).flat_map(|i| f(self.point(i))).collect();
        Self::new(self.n, coords.len() / self.n, coords)
    }
}

#[inline]
fn student_t(a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    1.0 / (1.0 + d2)
}

/// `Q_ij = W_ij / Z` with `W_ij = (1 + ‖yᵢ − yⱼ‖²)⁻¹`, `W_ii = 0` and
/// `Z = Σ_{k≠l} W_kl`. Returns `(Q, Z)`.
pub fn low_dim_affinities(y: &Embedding) -> Result<(SquareMatrix, f64)> {
    let n = y.n();
    let mut w = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let v = student_t(y.point(i), y.point(j));
            w.set(i, j, v);
            w.set(j, i, v);
        }
    }
    let z: f64 = (0..n).map(|i| w.row(i).iter().sum::<f64>()).sum();
    let q = SquareMatrix::new(n, w.values().iter().map(|v| v / z).collect())?;
    Ok((q, z))
}

/// `Σ_{i≠j} P_ij log(P_ij / Q_ij)` with both sides raised to the affinity floor.
pub fn kl_divergence(p: &AffinityMatrix, q: &SquareMatrix) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch(format!("P is {}x{0}, Q is {}x{1}", p.n(), q.n())));
    }
    let floor = p.floor;
    let n = p.n();
    let total = (0..n)
        .map(|i| {
            let (pr, qr) = (p.matrix.row(i), q.row(i));
            let mut s = 0.0;
            for j in 0..n {
                if j != i && pr[j] > 0.0 {
                    s += pr[j] * (pr[j].max(floor) / qr[j].max(floor)).ln();
                }
            }
            s
        })
        .sum();
    Ok(total)
}

/// KL(P‖Q(Y)) without materialising `Q`.
pub fn kl_for_embedding(p: &AffinityMatrix, y: &Embedding) -> Result<f64> {
    check_shape(p.n(), y)?;
    let n = y.n();
    let z: f64 = (0..n)
        .into_par_iter()
        .map(|i| (0..n).filter(|&j| j != i).map(|j| student_t(y.point(i), y.point(j))).sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let floor = p.floor;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pr = p.matrix.row(i);
            let mut s = 0.0;
            for j in 0..n {
                if j != i && pr[j] > 0.0 {
                    let q = student_t(y.point(i), y.point(j)) / z;
                    s += pr[j] * (pr[j].max(floor) / q.max(floor)).ln();
                }
            }
            s
        })
        .collect();
    Ok(rows.iter().sum())
}

pub(crate) fn check_shape(n: usize, y: &Embedding) -> Result<()> {
    if n != y.n() {
        return Err(Error::DimensionMismatch(format!(
            "affinities cover {n} points, embedding has {}",
            y.n()
        )));
    }
    Ok(())
}

/// Per-point pieces of the gradient: attraction `Σ P_ij W_ij (yᵢ − yⱼ)`,
/// unnormalised repulsion `Σ W_ij² (yᵢ − yⱼ)` and the row sum `Σ W_ij`.
fn exact_row_terms(p: &AffinityMatrix, y: &Embedding, i: usize, attr: &mut [f64], rep: &mut [f64]) -> f64 {
    let n = y.n();
    let dims = y.dims();
    let pr = p.matrix.row(i);
    let yi = y.point(i);
    let mut zrow = 0.0;
    if dims == 2 {
        let (xi, vi) = (yi[0], yi[1]);
        let (mut a0, mut a1, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let yj = y.point(j);
            let (dx, dy) = (xi - yj[0], vi - yj[1]);
            let w = 1.0 / (1.0 + dx * dx + dy * dy);
            zrow += w;
            let pw = pr[j] * w;
            a0 += pw * dx;
            a1 += pw * dy;
            let ww = w * w;
            r0 += ww * dx;
            r1 += ww * dy;
        }
        attr[0] = a0;
        attr[1] = a1;
        rep[0] = r0;
        rep[1] = r1;
    } else {
        attr.fill(0.0);
        rep.fill(0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let yj = y.point(j);
            let w = student_t(yi, yj);
            zrow += w;
            for k in 0..dims {
                let diff = yi[k] - yj[k];
                attr[k] += pr[j] * w * diff;
                rep[k] += w * w * diff;
            }
        }
    }
    zrow
}

/// Gradient with the attractive term scaled by `exaggeration`.
/// Returns the gradient and `Z`.
pub(crate) fn exact_gradient_scaled(p: &AffinityMatrix, y: &Embedding, exaggeration: f64) -> (Vec<f64>, f64) {
    let (n, dims) = (y.n(), y.dims());
    let mut attr = vec![0.0; n * dims];
    let mut rep = vec![0.0; n * dims];
    let zrows: Vec<f64> = attr
        .par_chunks_mut(dims)
        .zip(rep.par_chunks_mut(dims))
        .enumerate()
        .map(|(i, (a, r))| exact_row_terms(p, y, i, a, r))
        .collect();
    let z: f64 = zrows.iter().sum();
    let grad = attr
        .iter()
        .zip(&rep)
        .map(|(a, r)| 4.0 * (exaggeration * a - r / z))
        .collect();
    (grad, z)
}

/// `∂KL/∂yᵢ = 4 Σⱼ (P_ij − Q_ij) W_ij (yᵢ − yⱼ)`, returned `n × dims` row-major.
pub fn exact_gradient(p: &AffinityMatrix, y: &Embedding) -> Result<Vec<f64>> {
    check_shape(p.n(), y)?;
    Ok(exact_gradient_scaled(p, y, 1.0).0)
}

/// Exact repulsive force per point, `Σⱼ W_ij² (yᵢ − yⱼ) / Z`, and `Z`.
pub fn exact_repulsion(y: &Embedding) -> (Vec<f64>, f64) {
    let (n, dims) = (y.n(), y.dims());
    let mut rep = vec![0.0; n * dims];
    let zrows: Vec<f64> = rep
        .par_chunks_mut(dims)
        .enumerate()
        .map(|(i, r)| {
            let yi = y.point(i);
            let mut zrow = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                let w = student_t(yi, y.point(j));
                zrow += w;
                for k in 0..dims {
                    r[k] += w * w * (yi[k] - y.point(j)[k]);
                }
            }
            zrow
        })
        .collect();
    let z: f64 = zrows.iter().sum();
    rep.iter_mut().for_each(|r| *r /= z);
    (rep, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_embedding(n: usize, seed: u64) -> Embedding {
        let mut rng = SeededRng::new(seed);
        Embedding::new(n, 2, (0..2 * n).map(|_| rng.standard_normal()).collect()).unwrap()
    }

    fn random_p(n: usize, seed: u64) -> AffinityMatrix {
        let mut rng = SeededRng::new(seed);
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.uniform() + 0.01;
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        let s = m.sum();
        AffinityMatrix::from_matrix(SquareMatrix::new(n, m.values().iter().map(|v| v / s).collect()).unwrap(), 1e-12)
    }

    #[test]
    fn coincident_pair() {
        let y = Embedding::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let (q, z) = low_dim_affinities(&y).unwrap();
        assert_eq!(z, 2.0);
        assert_eq!(q.get(0, 1), 0.5);
        assert_eq!(q.get(1, 0), 0.5);
    }

    #[test]
    fn two_points_always_half() {
        let y = Embedding::new(2, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let (q, z) = low_dim_affinities(&y).unwrap();
        assert_eq!(z, 1.0);
        assert_eq!(q.get(0, 1), 0.5);
    }

    #[test]
    fn q_matches_double_loop() {
        let y = random_embedding(7, 3);
        let (q, _) = low_dim_affinities(&y).unwrap();
        let mut num = vec![vec![0.0; 7]; 7];
        let mut z = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    let d2 = (y.point(i)[0] - y.point(j)[0]).powi(2) + (y.point(i)[1] - y.point(j)[1]).powi(2);
                    num[i][j] = 1.0 / (1.0 + d2);
                    z += num[i][j];
                }
            }
        }
        assert!((q.sum() - 1.0).abs() <= 1e-12);
        for i in 0..7 {
            for j in 0..7 {
                assert!((q.get(i, j) - num[i][j] / z).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn kl_of_identical_distributions_is_zero() {
        let p = random_p(6, 1);
        assert!(kl_divergence(&p, &p.matrix).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn uniform_p_against_collapsed_embedding() {
        let n = 5;
        let v = 1.0 / (n * (n - 1)) as f64;
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.set(i, j, v);
                }
            }
        }
        let p = AffinityMatrix::from_matrix(m, 1e-12);
        let y = Embedding::new(n, 2, vec![0.3; 2 * n]).unwrap();
        let (q, _) = low_dim_affinities(&y).unwrap();
        assert!(kl_divergence(&p, &q).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn kl_matches_summation_oracle() {
        let p = random_p(5, 4);
        let (q, _) = low_dim_affinities(&random_embedding(5, 9)).unwrap();
        let mut want = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    want += p.get(i, j) * (p.get(i, j).ln() - q.get(i, j).ln());
                }
            }
        }
        assert!((kl_divergence(&p, &q).unwrap() - want).abs() <= 1e-12);
        assert!((kl_for_embedding(&p, &random_embedding(5, 9)).unwrap() - want).abs() <= 1e-12);
    }

    #[test]
    fn regular_polygon_gradient_is_radial() {
        let n = 6;
        let v = 1.0 / (n * (n - 1)) as f64;
        let mut m = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.set(i, j, v);
                }
            }
        }
        let p = AffinityMatrix::from_matrix(m, 1e-12);
        let coords: Vec<f64> = (0..n)
            .flat_map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                [2.0 * a.cos(), 2.0 * a.sin()]
            })
            .collect();
        let y = Embedding::new(n, 2, coords).unwrap();
        let g = exact_gradient(&p, &y).unwrap();
        let (mut sx, mut sy) = (0.0, 0.0);
        for i in 0..n {
            let (px, py) = (y.point(i)[0], y.point(i)[1]);
            let cross = px * g[2 * i + 1] - py * g[2 * i];
            assert!(cross.abs() <= 1e-12);
            sx += g[2 * i];
            sy += g[2 * i + 1];
        }
        assert!(sx.abs() <= 1e-10 && sy.abs() <= 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (n, seed) in [(5usize, 1u64), (8, 2), (12, 3)] {
            let p = random_p(n, seed);
            let y = random_embedding(n, seed + 100);
            let g = exact_gradient(&p, &y).unwrap();
            let h = 1e-5;
            for k in 0..2 * n {
                let mut plus = y.coords().to_vec();
                let mut minus = y.coords().to_vec();
                plus[k] += h;
                minus[k] -= h;
                let kl = |c: Vec<f64>| {
                    let e = Embedding::new(n, 2, c).unwrap();
                    kl_divergence(&p, &low_dim_affinities(&e).unwrap().0).unwrap()
                };
                let fd = (kl(plus) - kl(minus)) / (2.0 * h);
                let scale = g[k].abs().max(fd.abs());
                assert!((g[k] - fd).abs() <= 1e-5 * scale.max(1e-6), "n={n} k={k}: {} vs {fd}", g[k]);
            }
        }
    }

    #[test]
    fn translation_invariance() {
        let p = random_p(8, 5);
        let y = random_embedding(8, 6);
        let moved = y.map_points(|q| vec![q[0] + 3.5, q[1] - 1.25]).unwrap();
        let (a, b) = (kl_for_embedding(&p, &y).unwrap(), kl_for_embedding(&p, &moved).unwrap());
        assert!((a - b).abs() <= 1e-12);
        let (ga, gb) = (exact_gradient(&p, &y).unwrap(), exact_gradient(&p, &moved).unwrap());
        for (u, v) in ga.iter().zip(&gb) {
            assert!((u - v).abs() <= 1e-10);
        }
    }

    #[test]
    fn rotation_invariance() {
        let p = random_p(9, 7);
        let y = random_embedding(9, 8);
        let (s, c) = 0.7f64.sin_cos();
        let rotated = y.map_points(|q| vec![c * q[0] - s * q[1], s * q[0] + c * q[1]]).unwrap();
        let (a, b) = (kl_for_embedding(&p, &y).unwrap(), kl_for_embedding(&p, &rotated).unwrap());
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn gradient_sums_to_zero() {
        let p = random_p(10, 11);
        let g = exact_gradient(&p, &random_embedding(10, 12)).unwrap();
        let sx: f64 = g.iter().step_by(2).sum();
        let sy: f64 = g.iter().skip(1).step_by(2).sum();
        assert!(sx.abs() <= 1e-10 && sy.abs() <= 1e-10);
    }

    #[test]
    fn three_dimensional_path_matches_oracle() {
        let p = random_p(6, 13);
        let mut rng = SeededRng::new(14);
        let y = Embedding::new(6, 3, (0..18).map(|_| rng.standard_normal()).collect()).unwrap();
        let g = exact_gradient(&p, &y).unwrap();
        let (q, _) = low_dim_affinities(&y).unwrap();
        for i in 0..6 {
            for k in 0..3 {
                let mut want = 0.0;
                for j in 0..6 {
                    if j != i {
                        let w = student_t(y.point(i), y.point(j));
                        want += 4.0 * (p.get(i, j) - q.get(i, j)) * w * (y.point(i)[k] - y.point(j)[k]);
                    }
                }
                assert!((g[3 * i + k] - want).abs() <= 1e-12);
            }
        }
    }
}
