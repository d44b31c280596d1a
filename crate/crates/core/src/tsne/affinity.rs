//! Input-space affinities: perplexity-calibrated Gaussian conditionals and
//! their symmetrised joint distribution.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use super::config::TsneConfig;
use super::distances::{distances_from, row_norms, squared_distances, SquareMatrix};
use crate::data_io::DataMatrix;
use crate::error::{param, Result};

/// Conditional distribution `p(· | anchor)` over the entries of one distance row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRow {
    pub anchor: Option<usize>,
    pub probabilities: Vec<f64>,
    /// Precision `β = 1 / (2σ²)`.
    pub beta: f64,
    /// Shannon entropy in bits.
    pub entropy_bits: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Every distance was zero; the row fell back to uniform.
    pub duplicate: bool,
}

impl ConditionalRow {
    pub fn sigma(&self) -> f64 {
        (1.0 / (2.0 * self.beta)).sqrt()
    }

    pub fn perplexity(&self) -> f64 {
        self.entropy_bits.exp2()
    }
}

/// Gibbs weights `exp(−β δⱼ)` over shifted distances; returns `(weights, sum, entropy in nats)`.
fn gibbs(shifted: &[f64], skip: Option<usize>, beta: f64, out: &mut [f64]) -> (f64, f64) {
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, o)) in shifted.iter().zip(out.iter_mut()).enumerate() {
        if Some(j) == skip {
            *o = 0.0;
            continue;
        }
        let w = (-beta * d).exp();
        *o = w;
        sum += w;
        weighted += w * d;
    }
    (sum, sum.ln() + beta * weighted / sum)
}

/// Entropy (bits) of the Gibbs distribution at precision `beta`.
pub fn row_entropy_bits(distances: &[f64], anchor: Option<usize>, beta: f64) -> f64 {
    let min = min_excluding(distances, anchor);
    let shifted: Vec<f64> = distances.iter().map(|d| d - min).collect();
    let mut buf = vec![0.0; distances.len()];
    gibbs(&shifted, anchor, beta, &mut buf).1 / LN_2
}

fn min_excluding(distances: &[f64], anchor: Option<usize>) -> f64 {
    distances
        .iter()
        .enumerate()
        .filter(|&(j, _)| Some(j) != anchor)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min)
}

/// Finds `β` so that the row's perplexity matches `perplexity`.
///
/// The search starts at `β = 1 / mean(δ)` (δ the distances shifted by their
/// minimum), doubles or halves until the target entropy is bracketed, then
/// bisects. It stops once `|log2 achieved − log2 target| ≤ tol` or after
/// `max_iter` evaluations. Rows whose shifted distances are all equal have
/// a β-independent uniform solution and return immediately.
pub fn calibrate(
    distances: &[f64],
    anchor: Option<usize>,
    perplexity: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ConditionalRow> {
    let count = distances.len() - usize::from(anchor.is_some());
    if count < 2 {
        return Err(param("calibration needs at least two neighbours"));
    }
    if !(perplexity >= 1.0) || perplexity > count as f64 {
        return Err(param(format!(
            "perplexity {perplexity} must lie in [1, {count}]"
        )));
    }
    if let Some(j) = distances.iter().position(|d| !d.is_finite() || *d < 0.0) {
        return Err(param(format!("distance {j} is negative or not finite")));
    }

    let min = min_excluding(distances, anchor);
    let shifted: Vec<f64> = distances.iter().map(|d| d - min).collect();
    let (spread, max_shift) = shifted
        .iter()
        .enumerate()
        .filter(|&(j, _)| Some(j) != anchor)
        .fold((0.0, 0.0f64), |(s, m), (_, &d)| (s + d, m.max(d)));
    let mut probabilities = vec![0.0; distances.len()];

    if max_shift == 0.0 {
        let p = 1.0 / count as f64;
        for (j, o) in probabilities.iter_mut().enumerate() {
            *o = if Some(j) == anchor { 0.0 } else { p };
        }
        return Ok(ConditionalRow {
            anchor,
            probabilities,
            beta: 1.0,
            entropy_bits: (count as f64).log2(),
            iterations: 0,
            converged: true,
            duplicate: min == 0.0,
        });
    }

    let target = perplexity.log2();
    let mut beta = count as f64 / spread;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut iterations = 0;
    let mut converged = false;
    let (mut sum, mut entropy);
    loop {
        (sum, entropy) = gibbs(&shifted, anchor, beta, &mut probabilities);
        iterations += 1;
        let diff = entropy / LN_2 - target;
        if diff.abs() <= tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { 2.0 * beta };
        } else {
            hi = beta;
            beta = if lo > 0.0 { 0.5 * (beta + lo) } else { 0.5 * beta };
        }
    }
    probabilities.iter_mut().for_each(|p| *p /= sum);
    Ok(ConditionalRow {
        anchor,
        probabilities,
        beta,
        entropy_bits: entropy / LN_2,
        iterations,
        converged,
        duplicate: false,
    })
}

/// Calibrates one row of a full distance matrix, excluding the anchor itself.
pub fn calibrate_row(
    distances_row: &[f64],
    anchor: usize,
    perplexity: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ConditionalRow> {
    calibrate(distances_row, Some(anchor), perplexity, tol, max_iter)
}

/// Calibrated conditional rows for every point of a distance matrix.
pub fn conditional_rows(distances: &SquareMatrix, config: &TsneConfig) -> Result<Vec<ConditionalRow>> {
    (0..distances.n())
        .into_par_iter()
        .map(|i| {
            calibrate_row(
                distances.row(i),
                i,
                config.perplexity,
                config.calibration_tol,
                config.calibration_max_iter,
            )
        })
        .collect()
}

/// Dense joint distribution `P` over point pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    pub matrix: SquareMatrix,
    pub floor: f64,
    pub duplicate_rows: usize,
    pub unconverged_rows: usize,
}

impl AffinityMatrix {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    /// Symmetrises conditional rows: `P_ij = (p_{j|i} + p_{i|j}) / 2N`, then
    /// raises off-diagonal entries below `floor` to `floor` without renormalising.
    pub fn from_conditionals(rows: &[ConditionalRow], floor: f64) -> Self {
        let n = rows.len();
        let scale = 2.0 * n as f64;
        let mut matrix = SquareMatrix::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                let v = ((rows[i].probabilities[j] + rows[j].probabilities[i]) / scale).max(floor);
                matrix.set(i, j, v);
                matrix.set(j, i, v);
            }
        }
        Self {
            matrix,
            floor,
            duplicate_rows: rows.iter().filter(|r| r.duplicate).count(),
            unconverged_rows: rows.iter().filter(|r| !r.converged).count(),
        }
    }

    /// Builds `P` directly from a symmetric matrix (used by tests and oracles).
    pub fn from_matrix(matrix: SquareMatrix, floor: f64) -> Self {
        Self {
            matrix,
            floor,
            duplicate_rows: 0,
            unconverged_rows: 0,
        }
    }
}

/// Exact-mode input affinities: all pairwise distances, every row calibrated.
pub fn joint_affinities(x: &DataMatrix, config: &TsneConfig) -> Result<AffinityMatrix> {
    config.validate(x.n_rows())?;
    let distances = squared_distances(x)?;
    let rows = conditional_rows(&distances, config)?;
    Ok(AffinityMatrix::from_conditionals(&rows, config.min_prob_floor))
}

/// Sparse symmetric `P` in compressed-row form, columns sorted per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAffinity {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
    pub floor: f64,
    pub duplicate_rows: usize,
    pub unconverged_rows: usize,
}

impl SparseAffinity {
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(pos) => self.vals[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Dense copy with zeros where no entry is stored.
    pub fn to_dense(&self) -> AffinityMatrix {
        let mut m = SquareMatrix::zeros(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m.set(i, j, v);
            }
        }
        AffinityMatrix {
            matrix: m,
            floor: self.floor,
            duplicate_rows: self.duplicate_rows,
            unconverged_rows: self.unconverged_rows,
        }
    }
}

/// Indices of the `k` nearest rows to `i` (excluding `i`), ties to the smaller index.
pub(crate) fn nearest(distances: &[f64], i: usize, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..distances.len()).filter(|&j| j != i).collect();
    let cmp = |a: &usize, b: &usize| distances[*a].total_cmp(&distances[*b]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx
}

/// Approximate-mode affinities: each point's conditional is calibrated over
/// its `⌈3·perplexity⌉` nearest neighbours only, then symmetrised over the
/// union of the neighbour graphs.
pub fn sparse_joint_affinities(x: &DataMatrix, config: &TsneConfig) -> Result<SparseAffinity> {
    let n = x.n_rows();
    config.validate(n)?;
    let k = config.neighbor_count(n);
    let norms = row_norms(x);

    // (sorted neighbour columns, conditional probabilities)
    let conditionals: Vec<(Vec<usize>, Vec<f64>, bool, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let all = distances_from(x, &norms, i);
            let mut neighbours = nearest(&all, i, k);
            let d: Vec<f64> = neighbours.iter().map(|&j| all[j]).collect();
            let row = calibrate(
                &d,
                None,
                config.perplexity.min(k as f64),
                config.calibration_tol,
                config.calibration_max_iter,
            )?;
            let mut pairs: Vec<(usize, f64)> = neighbours.drain(..).zip(row.probabilities).collect();
            pairs.sort_by_key(|&(j, _)| j);
            let (cols, probs) = pairs.into_iter().unzip();
            Ok((cols, probs, row.duplicate, row.converged))
        })
        .collect::<Result<_>>()?;

    let lookup = |i: usize, j: usize| -> f64 {
        let (cols, probs, ..) = &conditionals[i];
        cols.binary_search(&j).map_or(0.0, |pos| probs[pos])
    };

    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, (cols, ..)) in conditionals.iter().enumerate() {
        for &j in cols {
            reverse[j].push(i);
        }
    }

    let scale = 2.0 * n as f64;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols_out = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    for i in 0..n {
        let mut union: Vec<usize> = conditionals[i].0.iter().chain(&reverse[i]).copied().collect();
        union.sort_unstable();
        union.dedup();
        for j in union {
            let v = ((lookup(i, j) + lookup(j, i)) / scale).max(config.min_prob_floor);
            cols_out.push(j);
            vals.push(v);
        }
        row_ptr.push(cols_out.len());
    }
    Ok(SparseAffinity {
        n,
        row_ptr,
        cols: cols_out,
        vals,
        floor: config.min_prob_floor,
        duplicate_rows: conditionals.iter().filter(|c| c.2).count(),
        unconverged_rows: conditionals.iter().filter(|c| !c.3).count(),
    })
}
