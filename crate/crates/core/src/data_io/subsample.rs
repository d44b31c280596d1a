use super::matrix::{DataMatrix, LabelVector};
use crate::error::{param, Result};
use crate::rng::SeededRng;

/// Chooses `m` of `n` indices without replacement.
///
/// Partial Fisher–Yates over `0..n`: for `i` in `0..m`, swap position `i`
/// with `i + index_below(n - i)`. The first `m` entries are then sorted so
/// the subset keeps the original row order.
pub fn subsample_indices(n: usize, m: usize, seed: u64) -> Result<Vec<usize>> {
    if m < 2 || m > n {
        return Err(param(format!("subsample size {m} must lie in 2..={n}")));
    }
    let mut rng = SeededRng::new(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + rng.index_below(n - i);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx.sort_unstable();
    Ok(idx)
}

pub fn subsample(
    x: &DataMatrix,
    y: &LabelVector,
    m: usize,
    seed: u64,
) -> Result<(DataMatrix, LabelVector)> {
    y.check_aligned(x.n_rows())?;
    let idx = subsample_indices(x.n_rows(), m, seed)?;
    Ok((x.select_rows(&idx)?, y.select(&idx)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn toy(n: usize) -> (DataMatrix, LabelVector) {
        let values = (0..n * 2).map(|v| v as f64).collect();
        (
            DataMatrix::new(n, 2, values).unwrap(),
            LabelVector::new((0..n as u64).collect()),
        )
    }

    #[test]
    fn full_size_is_identity() {
        let (x, y) = toy(9);
        let (xs, ys) = subsample(&x, &y, 9, 123).unwrap();
        assert_eq!(xs, x);
        assert_eq!(ys, y);
    }

    #[test]
    fn deterministic_and_aligned() {
        let (x, y) = toy(50);
        let a = subsample(&x, &y, 10, 5).unwrap();
        let b = subsample(&x, &y, 10, 5).unwrap();
        assert_eq!(a, b);
        for (row, &label) in a.0.rows().zip(a.1.as_slice()) {
            assert_eq!(row[0], 2.0 * label as f64);
        }
    }

    #[test]
    fn too_many_rows_requested() {
        let (x, y) = toy(4);
        assert!(matches!(subsample(&x, &y, 5, 0), Err(Error::Parameter(_))));
    }

    /// Hand-written SplitMix64 + xoshiro256** and the documented selection.
    fn oracle_indices(n: usize, m: usize, seed: u64) -> Vec<usize> {
        let mut sm = seed;
        let mut splitmix = || {
            sm = sm.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = sm;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^ (z >> 31)
        };
        let mut s = [splitmix(), splitmix(), splitmix(), splitmix()];
        let mut next = || {
            let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
            let t = s[1] << 17;
            s[2] ^= s[0];
            s[3] ^= s[1];
            s[1] ^= s[2];
            s[0] ^= s[3];
            s[2] ^= t;
            s[3] = s[3].rotate_left(45);
            result
        };
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let r = next();
            let j = i + ((r as u128 * (n - i) as u128) >> 64) as usize;
            pool.swap(i, j);
        }
        let mut chosen = pool[..m].to_vec();
        chosen.sort();
        chosen
    }

    #[test]
    fn matches_independent_reimplementation() {
        for seed in [0u64, 1, 42, 0xdead_beef] {
            assert_eq!(subsample_indices(5, 3, seed).unwrap(), oracle_indices(5, 3, seed));
            assert_eq!(subsample_indices(100, 17, seed).unwrap(), oracle_indices(100, 17, seed));
        }
    }

    proptest::proptest! {
        #[test]
        fn subset_without_repeats(n in 2usize..200, frac in 0.0f64..1.0, seed in proptest::prelude::any::<u64>()) {
            let m = 2 + ((n - 2) as f64 * frac) as usize;
            let idx = subsample_indices(n, m, seed).unwrap();
            proptest::prop_assert_eq!(idx.len(), m);
            proptest::prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            proptest::prop_assert!(idx.iter().all(|&i| i < n));
        }
    }
}
