use rand::Rng;

use crate::error::{Error, Result};

/// Systematic resampling with an explicit offset `u` in `[0, 1)`.
///
/// Grid points are `(u + j) / J`; each maps to the smallest index whose
/// cumulative weight reaches it. Zero-weight particles are never selected.
pub fn systematic_resample_with_offset(weights: &[f64], u: f64) -> Result<Vec<usize>> {
    systematic_indices(weights, weights.len(), u)
}

/// As [`systematic_resample_with_offset`] but drawing `count` indices.
pub fn systematic_indices(weights: &[f64], count: usize, u: f64) -> Result<Vec<usize>> {
    let j = weights.len();
    if j == 0 || count == 0 {
        return Err(Error::InvalidArgument("no weights to resample".into()));
    }
    if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "weight {i} is negative or non-finite ({})",
            weights[i]
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!("offset {u} outside [0, 1)")));
    }
    let last_positive = weights.iter().rposition(|w| *w > 0.0).unwrap_or(j - 1);

    let mut out = Vec::with_capacity(count);
    let mut i = 0usize;
    let mut cum = weights[0];
    let jf = count as f64;
    for k in 0..count {
        let point = (u + k as f64) / jf;
        while i < last_positive && (cum < point || weights[i] == 0.0) {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
    }
    Ok(out)
}

/// Systematic resampling drawing the offset from `rng`.
pub fn systematic_resample<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<Vec<usize>> {
    let u: f64 = rng.random();
    systematic_resample_with_offset(weights, u)
}
