//! Barnes-Hut approximation of the repulsive gradient term on a quadtree.
//!
//! A cell is replaced by its centre of mass when `width / distance < theta`
//! and the query point lies outside it, using a second-order expansion of
//! the kernel about that centre (the cell's second moments correct the
//! monopole term). Leaves are visited point by point, so `theta = 0`
//! reproduces the exact sums.

use rayon::prelude::*;

use super::affinity::SparseAffinity;
use super::kernel::{check_shape, Embedding};
use crate::error::{param, Error, Result};

const MAX_DEPTH: usize = 48;
const NO_CHILD: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Cell {
    min: [f64; 2],
    width: f64,
    count: usize,
    com: [f64; 2],
    /// Second moments about the centre of mass: `[Σδx², Σδxδy, Σδy²]`.
    moments: [f64; 3],
    children: [u32; 4],
    /// Point indices, populated for leaves only.
    points: Vec<u32>,
}

impl Cell {
    fn is_leaf(&self) -> bool {
        self.children[0] == NO_CHILD
    }

    fn contains(&self, p: &[f64]) -> bool {
        p[0] >= self.min[0]
            && p[0] <= self.min[0] + self.width
            && p[1] >= self.min[1]
            && p[1] <= self.min[1] + self.width
    }
}

/// Point-region quadtree over a 2-D embedding, stored as an arena.
#[derive(Debug, Clone)]
pub struct QuadTree {
    cells: Vec<Cell>,
}

impl QuadTree {
    pub fn build(y: &Embedding) -> Self {
        assert_eq!(y.dims(), 2, "quadtree needs a 2-D embedding");
        let n = y.n();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for i in 0..n {
            for k in 0..2 {
                lo[k] = lo[k].min(y.point(i)[k]);
                hi[k] = hi[k].max(y.point(i)[k]);
            }
        }
        let width = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        // Pad so points on the upper boundary fall strictly inside.
        let width = if width > 0.0 { width * (1.0 + 1e-9) } else { 0.0 };
        let mut tree = QuadTree { cells: Vec::new() };
        let all: Vec<u32> = (0..n as u32).collect();
        tree.insert_cell(y, lo, width, all, 0);
        tree
    }

    fn insert_cell(&mut self, y: &Embedding, min: [f64; 2], width: f64, points: Vec<u32>, depth: usize) -> u32 {
        let count = points.len();
        let mut com = [0.0; 2];
        for &p in &points {
            let q = y.point(p as usize);
            com[0] += q[0];
            com[1] += q[1];
        }
        if count > 0 {
            com[0] /= count as f64;
            com[1] /= count as f64;
        }
        let mut moments = [0.0; 3];
        for &p in &points {
            let q = y.point(p as usize);
            let (dx, dy) = (q[0] - com[0], q[1] - com[1]);
            moments[0] += dx * dx;
            moments[1] += dx * dy;
            moments[2] += dy * dy;
        }
        let id = self.cells.len() as u32;
        let first = points.first().map(|&p| y.point(p as usize));
        let all_same = first.is_some_and(|f| points.iter().all(|&p| y.point(p as usize) == f));
        let leaf = count <= 1 || depth >= MAX_DEPTH || all_same || width == 0.0;
        self.cells.push(Cell {
            min,
            width,
            count,
            com,
            moments,
            children: [NO_CHILD; 4],
            points: if leaf { points.clone() } else { Vec::new() },
        });
        if leaf {
            return id;
        }
        let half = 0.5 * width;
        let mid = [min[0] + half, min[1] + half];
        let mut quads: [Vec<u32>; 4] = Default::default();
        for &p in &points {
            let q = y.point(p as usize);
            let idx = usize::from(q[0] >= mid[0]) + 2 * usize::from(q[1] >= mid[1]);
            quads[idx].push(p);
        }
        let mut children = [NO_CHILD; 4];
        for (k, pts) in quads.into_iter().enumerate() {
            let cmin = [min[0] + half * (k % 2) as f64, min[1] + half * (k / 2) as f64];
            children[k] = self.insert_cell(y, cmin, half, pts, depth + 1);
        }
        self.cells[id as usize].children = children;
        id
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Unnormalised repulsion `Σ W² (yᵢ − y)` and partial `Z` for point `i`.
    fn repulsion(&self, y: &Embedding, i: usize, theta: f64) -> ([f64; 2], f64) {
        let yi = y.point(i);
        let mut force = [0.0; 2];
        let mut z = 0.0;
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let cell = &self.cells[id as usize];
            if cell.count == 0 {
                continue;
            }
            if cell.is_leaf() {
                for &p in &cell.points {
                    let p = p as usize;
                    if p == i {
                        continue;
                    }
                    let yp = y.point(p);
                    let (dx, dy) = (yi[0] - yp[0], yi[1] - yp[1]);
                    let w = 1.0 / (1.0 + dx * dx + dy * dy);
                    z += w;
                    force[0] += w * w * dx;
                    force[1] += w * w * dy;
                }
                continue;
            }
            let (dx, dy) = (yi[0] - cell.com[0], yi[1] - cell.com[1]);
            let d2 = dx * dx + dy * dy;
            if !cell.contains(yi) && cell.width * cell.width < theta * theta * d2 {
                let h = 1.0 / (1.0 + d2);
                let c = cell.count as f64;
                let [mxx, mxy, myy] = cell.moments;
                let trace = mxx + myy;
                let (mr0, mr1) = (mxx * dx + mxy * dy, mxy * dx + myy * dy);
                let rmr = dx * mr0 + dy * mr1;
                let (h2, h3) = (h * h, h * h * h);
                z += c * h - trace * h2 + 4.0 * h3 * rmr;
                let radial = c * h2 - 2.0 * h3 * trace + 12.0 * h3 * h * rmr;
                force[0] += radial * dx - 4.0 * h3 * mr0;
                force[1] += radial * dy - 4.0 * h3 * mr1;
            } else {
                // Reverse so children are visited in index order.
                for &child in cell.children.iter().rev() {
                    stack.push(child);
                }
            }
        }
        (force, z)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(param(format!("theta must lie in [0, 1], got {theta}")));
    }
    Ok(())
}

fn repulsion_terms(y: &Embedding, theta: f64) -> (Vec<f64>, f64) {
    let n = y.n();
    let tree = QuadTree::build(y);
    let mut rep = vec![0.0; 2 * n];
    let zrows: Vec<f64> = rep
        .par_chunks_mut(2)
        .enumerate()
        .map(|(i, r)| {
            let (f, z) = tree.repulsion(y, i, theta);
            r.copy_from_slice(&f);
            z
        })
        .collect();
    (rep, zrows.iter().sum())
}

/// Approximate repulsive force per point, `Σⱼ W_ij² (yᵢ − yⱼ) / Z`, and `Z`.
pub fn barnes_hut_repulsion(y: &Embedding, theta: f64) -> Result<(Vec<f64>, f64)> {
    check_theta(theta)?;
    if y.dims() != 2 {
        return Err(Error::DimensionMismatch("Barnes-Hut needs a 2-D embedding".into()));
    }
    let (mut rep, z) = repulsion_terms(y, theta);
    rep.iter_mut().for_each(|r| *r /= z);
    Ok((rep, z))
}

/// Gradient with exact attraction over stored `P` entries (scaled by
/// `exaggeration`) and tree-approximated repulsion. Returns `(gradient, Z)`.
pub(crate) fn barnes_hut_gradient_scaled(
    p: &SparseAffinity,
    y: &Embedding,
    theta: f64,
    exaggeration: f64,
) -> (Vec<f64>, f64) {
    let (rep, z) = repulsion_terms(y, theta);
    let mut grad = vec![0.0; 2 * y.n()];
    grad.par_chunks_mut(2).enumerate().for_each(|(i, g)| {
        let yi = y.point(i);
        let (mut a0, mut a1) = (0.0, 0.0);
        for (j, pij) in p.row(i) {
            let yj = y.point(j);
            let (dx, dy) = (yi[0] - yj[0], yi[1] - yj[1]);
            let w = 1.0 / (1.0 + dx * dx + dy * dy);
            a0 += pij * w * dx;
            a1 += pij * w * dy;
        }
        g[0] = 4.0 * (exaggeration * a0 - rep[2 * i] / z);
        g[1] = 4.0 * (exaggeration * a1 - rep[2 * i + 1] / z);
    });
    (grad, z)
}

pub fn barnes_hut_gradient(p: &SparseAffinity, y: &Embedding, theta: f64) -> Result<Vec<f64>> {
    check_theta(theta)?;
    check_shape(p.n, y)?;
    if y.dims() != 2 {
        return Err(Error::DimensionMismatch("Barnes-Hut needs a 2-D embedding".into()));
    }
    Ok(barnes_hut_gradient_scaled(p, y, theta, 1.0).0)
}

/// KL over the stored entries of `P`, with `Z` taken from the tree.
pub(crate) fn sparse_kl(p: &SparseAffinity, y: &Embedding, z: f64) -> f64 {
    let rows: Vec<f64> = (0..p.n)
        .into_par_iter()
        .map(|i| {
            let yi = y.point(i);
            p.row(i)
                .map(|(j, pij)| {
                    let yj = y.point(j);
                    let d2 = (yi[0] - yj[0]).powi(2) + (yi[1] - yj[1]).powi(2);
                    let q = (1.0 / (1.0 + d2) / z).max(p.floor);
                    pij * (pij.max(p.floor) / q).ln()
                })
                .sum()
        })
        .collect();
    rows.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::DataMatrix;
    use crate::rng::SeededRng;
    use crate::tsne::{exact_gradient, exact_repulsion, sparse_joint_affinities, TsneConfig};

    fn blob(n: usize, spread: f64, seed: u64) -> Embedding {
        let mut rng = SeededRng::new(seed);
        Embedding::new(n, 2, (0..2 * n).map(|_| spread * rng.standard_normal()).collect()).unwrap()
    }

    fn sparse_p(n: usize, seed: u64) -> SparseAffinity {
        let mut rng = SeededRng::new(seed);
        let x = DataMatrix::new(n, 4, (0..4 * n).map(|_| rng.standard_normal()).collect()).unwrap();
        let cfg = TsneConfig {
            perplexity: 5.0,
            theta: 0.5,
            ..TsneConfig::default()
        };
        sparse_joint_affinities(&x, &cfg).unwrap()
    }

    #[test]
    fn theta_zero_is_exact() {
        let p = sparse_p(50, 1);
        let y = blob(50, 3.0, 2);
        let bh = barnes_hut_gradient(&p, &y, 0.0).unwrap();
        let exact = exact_gradient(&p.to_dense(), &y).unwrap();
        let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in bh.iter().zip(&exact) {
            assert!((a - b).abs() <= 1e-6 * scale);
        }
    }

    #[test]
    fn theta_half_repulsion_is_close() {
        for seed in 0..5 {
            let y = blob(500, 1.0, seed);
            let (approx, za) = barnes_hut_repulsion(&y, 0.5).unwrap();
            let (exact, ze) = exact_repulsion(&y);
            let mut worst: f64 = 0.0;
            for i in 0..500 {
                let e = (exact[2 * i].powi(2) + exact[2 * i + 1].powi(2)).sqrt();
                let d = ((approx[2 * i] - exact[2 * i]).powi(2) + (approx[2 * i + 1] - exact[2 * i + 1]).powi(2)).sqrt();
                worst = worst.max(d / e);
            }
            assert!(worst <= 0.05, "seed {seed}: worst relative error {worst}");
            assert!((za - ze).abs() <= 1e-3 * ze);
        }
    }

    #[test]
    fn single_far_cell_matches_expansion_oracle() {
        // Four points in a tight square far from the query: the second-order
        // summary must beat the plain centre-of-mass estimate.
        let coords = vec![0.0, 0.0, 40.0, 40.0, 40.2, 40.0, 40.0, 40.2, 40.2, 40.2];
        let y = Embedding::new(5, 2, coords).unwrap();
        let (approx, _) = barnes_hut_repulsion(&y, 0.9).unwrap();
        let (exact, _) = exact_repulsion(&y);
        let (dx, dy): (f64, f64) = (-40.1, -40.1);
        let w = 1.0 / (1.0 + dx * dx + dy * dy);
        let exact_unnorm: f64 = (1..5)
            .map(|j| {
                let (ex, ey) = (-y.point(j)[0], -y.point(j)[1]);
                let wj = 1.0 / (1.0 + ex * ex + ey * ey);
                wj * wj * ex
            })
            .sum();
        let monopole_err = (4.0 * w * w * dx - exact_unnorm).abs();
        let (_, z_exact) = exact_repulsion(&y);
        let tree_err = ((approx[0] - exact[0]) * z_exact).abs();
        assert!(tree_err < 0.01 * monopole_err, "{tree_err} vs {monopole_err}");
    }

    #[test]
    fn coincident_points_give_finite_gradient() {
        let y = Embedding::new(10, 2, vec![0.25; 20]).unwrap();
        let p = sparse_p(10, 4);
        let g = barnes_hut_gradient(&p, &y, 0.5).unwrap();
        assert!(g.iter().all(|v| v.is_finite()));
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tree_counts_every_point_once() {
        let y = blob(200, 1.0, 5);
        let tree = QuadTree::build(&y);
        let leaf_points: usize = tree.cells.iter().filter(|c| c.is_leaf()).map(|c| c.points.len()).sum();
        assert_eq!(leaf_points, 200);
        assert_eq!(tree.cells[0].count, 200);
    }

    #[test]
    fn rejects_bad_theta() {
        let y = blob(5, 1.0, 1);
        assert!(barnes_hut_repulsion(&y, 1.5).is_err());
    }
}
