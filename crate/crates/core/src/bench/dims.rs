use crate::error::{param, Result};

/// Exponentially spaced target dimensions: `round(start · base^t)` for
/// `t = 0, 1, …` while below `d`, then `d`. Rounding is half away from
/// zero; the result is strictly increasing.
pub fn sweep_dimensions(d: usize, start: usize, base: f64) -> Result<Vec<usize>> {
    if start == 0 || start > d {
        return Err(param(format!("dimension sweep start {start} must lie in 1..={d}")));
    }
    if !(base > 1.0) || !base.is_finite() {
        return Err(param(format!("dimension sweep base must exceed 1, got {base}")));
    }
    let mut dims = Vec::new();
    for t in 0.. {
        let value = (start as f64 * base.powi(t)).round();
        if value >= d as f64 {
            break;
        }
        let value = value as usize;
        if dims.last() != Some(&value) {
            dims.push(value);
        }
    }
    dims.push(d);
    Ok(dims)
}
