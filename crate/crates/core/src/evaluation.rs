//! Embedding quality (nearest-neighbour label agreement) and stage timing.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::data_io::LabelVector;
use crate::error::{param, Error, Result};
use crate::reducers::ReducerKind;
use crate::tsne::Embedding;

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub k: usize,
    /// Fraction of points whose modal neighbour label equals their own.
    pub score: f64,
    pub per_class_scores: BTreeMap<u64, f64>,
    /// Points whose neighbour vote was tied between labels.
    pub tie_count: usize,
}

/// Indices of the `k` nearest points to `i` (excluding `i`), nearest
/// first, equal distances ordered by index.
fn k_nearest(y: &Embedding, i: usize, k: usize) -> Vec<usize> {
    let yi = y.point(i);
    let mut cand: Vec<(f64, usize)> = (0..y.n())
        .filter(|&j| j != i)
        .map(|j| {
            let d: f64 = yi.iter().zip(y.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            (d, j)
        })
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_by(cmp);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Most frequent label, smallest label on ties. Returns `(label, tied)`.
fn modal_label(labels: impl Iterator<Item = u64>) -> (u64, bool) {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let mut winners = counts.iter().filter(|&(_, &c)| c == best).map(|(&l, _)| l);
    let label = winners.next().expect("at least one neighbour");
    (label, winners.next().is_some())
}

/// Scores an embedding: a point is correct when the modal label among its
/// `k` nearest neighbours matches its own.
pub fn accuracy_score(y: &Embedding, labels: &LabelVector, k: usize) -> Result<AccuracyReport> {
    let n = y.n();
    labels.check_aligned(n)?;
    if k == 0 || k >= n {
        return Err(param(format!("k must lie in 1..{n}, got {k}")));
    }
    if labels.distinct_count() < 2 {
        return Err(Error::DegenerateLabels);
    }
    let l = labels.as_slice();
    let outcomes: Vec<(bool, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let neighbours = k_nearest(y, i, k);
            let (label, tied) = modal_label(neighbours.iter().map(|&j| l[j]));
            (label == l[i], tied)
        })
        .collect();

    let mut per_class: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for (&label, &(ok, _)) in l.iter().zip(&outcomes) {
        let e = per_class.entry(label).or_default();
        e.0 += usize::from(ok);
        e.1 += 1;
    }
    let correct = outcomes.iter().filter(|o| o.0).count();
    Ok(AccuracyReport {
        k,
        score: correct as f64 / n as f64,
        per_class_scores: per_class
            .into_iter()
            .map(|(label, (ok, total))| (label, ok as f64 / total as f64))
            .collect(),
        tie_count: outcomes.iter().filter(|o| o.1).count(),
    })
}

/// Runs `action` and returns its result with the elapsed monotonic wall time in seconds.
pub fn time_stage<T>(action: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = action();
    (out, start.elapsed().as_secs_f64())
}

/// One benchmark observation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub reducer: ReducerKind,
    pub d_prime: usize,
    pub seed: u64,
    /// Wall time of the t-SNE stage only.
    pub tsne_seconds: f64,
    pub accuracy: f64,
    pub final_kl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub d_prime: usize,
    pub time_ratio: f64,
    pub accuracy_ratio: f64,
}

/// Time and accuracy of each run relative to the unreduced baseline,
/// sorted by `d_prime` (stable for equal dimensions).
pub fn ratio_table(baseline: &RunRecord, runs: &[RunRecord]) -> Result<Vec<RatioRow>> {
    if baseline.reducer != ReducerKind::None {
        return Err(param("baseline run must use no reduction"));
    }
    if baseline.accuracy == 0.0 {
        return Err(Error::Numeric("baseline accuracy is zero; ratios are undefined".into()));
    }
    if !(baseline.tsne_seconds > 0.0) {
        return Err(Error::Numeric("baseline time must be positive".into()));
    }
    let mut rows: Vec<RatioRow> = runs
        .iter()
        .map(|r| RatioRow {
            d_prime: r.d_prime,
            time_ratio: r.tsne_seconds / baseline.tsne_seconds,
            accuracy_ratio: r.accuracy / baseline.accuracy,
        })
        .collect();
    rows.sort_by_key(|r| r.d_prime);
    Ok(rows)
}
