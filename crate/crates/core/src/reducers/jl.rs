use crate::data_io::DataMatrix;
use crate::error::{param, Error, Result};
use crate::rng::SeededRng;

/// Distance-distortion statistics of a reduction over a set of point pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct JlAudit {
    pub epsilon: f64,
    /// Pairs whose ratio was evaluated.
    pub pair_count: usize,
    /// Pairs skipped because the original points coincide.
    pub skipped_pairs: usize,
    /// Largest `|ratio − 1|` observed.
    pub max_distortion: f64,
    /// Fraction of evaluated pairs with ratio in `[1 − ε, 1 + ε]`.
    pub fraction_within: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Audits `‖x′ᵢ − x′ⱼ‖² / ‖xᵢ − xⱼ‖²` on up to `pair_budget` pairs.
/// See [`jl_audit_scaled`].
pub fn jl_audit(
    x: &DataMatrix,
    x_proj: &DataMatrix,
    epsilon: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<JlAudit> {
    jl_audit_scaled(x, x_proj, 1.0, epsilon, pair_budget, seed)
}

/// Like [`jl_audit`], with projected squared distances multiplied by
/// `scale` first (for a `N(0, 1/d)` projection, pass
/// [`ProjectionMatrix::distance_scale`](super::ProjectionMatrix::distance_scale)).
///
/// When the budget covers every pair, all pairs are visited in `(i, j)`
/// order; otherwise `pair_budget` pairs are drawn uniformly with
/// replacement from the seeded stream.
pub fn jl_audit_scaled(
    x: &DataMatrix,
    x_proj: &DataMatrix,
    scale: f64,
    epsilon: f64,
    pair_budget: usize,
    seed: u64,
) -> Result<JlAudit> {
    let n = x.n_rows();
    if n != x_proj.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "{n} original rows vs {} projected rows",
            x_proj.n_rows()
        )));
    }
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(param(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }

    let mut audit = JlAudit {
        epsilon,
        pair_count: 0,
        skipped_pairs: 0,
        max_distortion: 0.0,
        fraction_within: 1.0,
    };
    let mut within = 0usize;
    let mut visit = |i: usize, j: usize| {
        let original = sq_dist(x.row(i), x.row(j));
        if original == 0.0 {
            audit.skipped_pairs += 1;
            return;
        }
        let ratio = scale * sq_dist(x_proj.row(i), x_proj.row(j)) / original;
        let distortion = (ratio - 1.0).abs();
        audit.pair_count += 1;
        audit.max_distortion = audit.max_distortion.max(distortion);
        if distortion <= epsilon {
            within += 1;
        }
    };

    let total = n * (n - 1) / 2;
    if pair_budget >= total {
        for i in 0..n {
            for j in i + 1..n {
                visit(i, j);
            }
        }
    } else {
        let mut rng = SeededRng::new(seed);
        for _ in 0..pair_budget {
            let i = rng.index_below(n);
            let mut j = rng.index_below(n - 1);
            if j >= i {
                j += 1;
            }
            visit(i.min(j), i.max(j));
        }
    }
    if audit.pair_count > 0 {
        audit.fraction_within = within as f64 / audit.pair_count as f64;
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reducers::{apply_projection, gaussian_projection};

    fn normal_points(n: usize, d: usize, seed: u64) -> DataMatrix {
        let mut rng = SeededRng::new(seed);
        DataMatrix::new(n, d, (0..n * d).map(|_| rng.standard_normal()).collect()).unwrap()
    }

    #[test]
    fn identity_reduction_is_perfect() {
        let x = normal_points(20, 5, 1);
        let a = jl_audit(&x, &x, 0.1, usize::MAX, 0).unwrap();
        assert_eq!(a.fraction_within, 1.0);
        assert_eq!(a.max_distortion, 0.0);
        assert_eq!(a.pair_count, 190);
    }

    #[test]
    fn duplicate_rows_are_skipped() {
        let x = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let a = jl_audit(&x, &x, 0.5, usize::MAX, 0).unwrap();
        assert_eq!(a.skipped_pairs, 1);
        assert_eq!(a.pair_count, 2);
        assert!(a.max_distortion.is_finite());
    }

    #[test]
    fn gaussian_projection_preserves_distances() {
        let x = normal_points(200, 784, 3);
        let mut best = 0.0;
        for seed in [5u64, 6] {
            let r = gaussian_projection(784, 200, seed).unwrap();
            let a = jl_audit_scaled(&x, &apply_projection(&x, &r).unwrap(), r.distance_scale(), 0.3, usize::MAX, 0).unwrap();
            best = a.fraction_within;
            if best >= 0.99 {
                break;
            }
        }
        assert!(best >= 0.99, "fraction within {best}");
    }

    #[test]
    fn sampled_budget_is_respected() {
        let x = normal_points(50, 4, 2);
        let a = jl_audit(&x, &x, 0.1, 100, 9).unwrap();
        assert_eq!(a.pair_count + a.skipped_pairs, 100);
    }

    #[test]
    fn mismatched_rows() {
        let x = normal_points(5, 3, 1);
        let y = normal_points(4, 3, 1);
        assert!(jl_audit(&x, &y, 0.1, 10, 0).is_err());
    }
}
