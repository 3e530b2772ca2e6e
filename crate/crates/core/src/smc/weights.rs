use crate::error::{Error, Result};

/// Sum in a fixed binary tree so the result does not depend on how the
/// terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Normalized weights and the log of the mean unnormalized weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub weights: Vec<f64>,
    pub log_mean_weight: f64,
}

/// Normalize log-weights with a max shift. `n` is only used to label a
/// degeneracy error.
pub fn normalize_logweights(logw: &[f64], n: usize) -> Result<Normalized> {
    if logw.is_empty() {
        return Err(Error::InvalidArgument("no particles".into()));
    }
    if logw.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite {
            n,
            what: "log-weight".into(),
        });
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Degeneracy { n });
    }
    if max == f64::INFINITY {
        return Err(Error::NonFinite {
            n,
            what: "log-weight is +inf".into(),
        });
    }
    let mut weights: Vec<f64> = logw.iter().map(|&l| (l - max).exp()).collect();
    let total = pairwise_sum(&weights);
    for w in &mut weights {
        *w /= total;
    }
    let log_mean_weight = max + total.ln() - (logw.len() as f64).ln();
    Ok(Normalized {
        weights,
        log_mean_weight,
    })
}

/// Effective sample size `1 / sum w_j^2` of normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let sq: Vec<f64> = weights.iter().map(|w| w * w).collect();
    1.0 / pairwise_sum(&sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn equal_weights() {
        let r = normalize_logweights(&[0.0; 4], 1).unwrap();
        assert_eq!(r.weights, vec![0.25; 4]);
        assert_eq!(r.log_mean_weight, 0.0);
    }

    #[test]
    fn constant_shift() {
        for c in [-700.0, -3.2, 0.0, 41.5, 700.0] {
            let r = normalize_logweights(&[c; 4], 1).unwrap();
            assert_eq!(r.weights, vec![0.25; 4]);
            assert_relative_eq!(r.log_mean_weight, c, max_relative = 1e-15);
        }
    }

    #[test]
    fn three_to_one() {
        let r = normalize_logweights(&[3f64.ln(), 0.0], 1).unwrap();
        assert_relative_eq!(r.weights[0], 0.75, max_relative = 1e-15);
        assert_relative_eq!(r.weights[1], 0.25, max_relative = 1e-15);
        assert_relative_eq!(r.log_mean_weight, 2f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn all_neg_inf_is_degenerate() {
        let e = normalize_logweights(&[f64::NEG_INFINITY; 3], 17).unwrap_err();
        assert!(matches!(e, Error::Degeneracy { n: 17 }));
    }

    #[test]
    fn partial_neg_inf_ok() {
        let r = normalize_logweights(&[f64::NEG_INFINITY, 0.0], 1).unwrap();
        assert_eq!(r.weights, vec![0.0, 1.0]);
        assert_relative_eq!(r.log_mean_weight, -(2f64.ln()));
    }

    #[test]
    fn ess_bounds() {
        assert_relative_eq!(effective_sample_size(&[0.25; 4]), 4.0);
        assert_relative_eq!(effective_sample_size(&[1.0, 0.0, 0.0]), 1.0);
    }

    proptest! {
        #[test]
        fn shift_invariance(lw in prop::collection::vec(-50.0f64..50.0, 2..64), c in -500.0f64..500.0) {
            let a = normalize_logweights(&lw, 0).unwrap();
            let shifted: Vec<f64> = lw.iter().map(|v| v + c).collect();
            let b = normalize_logweights(&shifted, 0).unwrap();
            for (x, y) in a.weights.iter().zip(&b.weights) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            prop_assert!((b.log_mean_weight - a.log_mean_weight - c).abs() <= 1e-9);
            let s: f64 = a.weights.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            let ess = effective_sample_size(&a.weights);
            prop_assert!(ess >= 1.0 - 1e-12 && ess <= lw.len() as f64 + 1e-9);
        }
    }
}
