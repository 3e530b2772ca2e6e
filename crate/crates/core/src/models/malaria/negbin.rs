//! Negative binomial observation density with mean `M` and variance `M + M^2 sigma^2`.

use statrs::function::gamma::ln_gamma;

/// `log P(Y = y)` for `y` a nonnegative integer count, size `k = 1/sigma2`
/// and success probability `k / (k + mean)`.
///
/// `mean = 0` gives `0` at `y = 0` and `-inf` otherwise. `sigma2 = 0` is the
/// Poisson limit. Non-integer or negative `y` and negative `mean` give `-inf`.
pub fn negbin_logpdf(y: f64, mean: f64, sigma2: f64) -> f64 {
    if !(y >= 0.0) || y.fract() != 0.0 || !(mean >= 0.0) || !(sigma2 >= 0.0) {
        return f64::NEG_INFINITY;
    }
    if mean == 0.0 {
        return if y == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if sigma2 == 0.0 {
        return y * mean.ln() - mean - ln_gamma(y + 1.0);
    }
    let k = 1.0 / sigma2;
    // log(k/(k+m)) and log(m/(k+m)) without cancellation for large k
    let log_p = -(mean * sigma2).ln_1p();
    let log_q = mean.ln() - (k + mean).ln();
    ln_gamma(y + k) - ln_gamma(k) - ln_gamma(y + 1.0) + k * log_p + y * log_q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Gamma, Poisson};

    #[test]
    fn closed_form_zero_count() {
        assert!((negbin_logpdf(0.0, 1.0, 1.0) + 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn poisson_limit() {
        for y in 0..=50 {
            let y = y as f64;
            let pois = y * 10f64.ln() - 10.0 - ln_gamma(y + 1.0);
            assert!((negbin_logpdf(y, 10.0, 1e-8) - pois).abs() < 1e-4, "y={y}");
        }
    }

    #[test]
    fn zero_mean_convention() {
        assert_eq!(negbin_logpdf(0.0, 0.0, 0.5), 0.0);
        assert_eq!(negbin_logpdf(3.0, 0.0, 0.5), f64::NEG_INFINITY);
        assert_eq!(negbin_logpdf(1.5, 2.0, 0.5), f64::NEG_INFINITY);
        assert_eq!(negbin_logpdf(-1.0, 2.0, 0.5), f64::NEG_INFINITY);
    }

    #[test]
    fn sums_to_one() {
        for &(m, s2) in &[(0.5, 0.3), (10.0, 0.1), (100.0, 0.04), (100.0, 2.0), (3.0, 1e-6)] {
            let mut terms: Vec<f64> = (0..=100_000).map(|y| negbin_logpdf(y as f64, m, s2).exp()).collect();
            terms.reverse();
            let total: f64 = terms.iter().sum();
            assert!((total - 1.0).abs() < 1e-8, "m={m} s2={s2}: {total}");
        }
    }

    #[test]
    fn moments_match_gamma_poisson_draws() {
        let (m, s2) = (20.0, 0.25);
        let k = 1.0 / s2;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = Gamma::new(k, m / k).unwrap();
        let n = 1_000_000;
        let mut raw = [0.0f64; 4];
        for _ in 0..n {
            let y = Poisson::new(g.sample(&mut rng)).unwrap().sample(&mut rng);
            let mut p = 1.0;
            for r in raw.iter_mut() {
                p *= y;
                *r += p;
            }
        }
        let [e1, e2, e3, e4] = raw.map(|r| r / n as f64);
        let mean = e1;
        let var = e2 - e1 * e1;
        let m4 = e4 - 4.0 * e1 * e3 + 6.0 * e1 * e1 * e2 - 3.0 * e1.powi(4);
        let target_var = m + m * m * s2;
        assert!((mean - m).abs() < 3.0 * (target_var / n as f64).sqrt());
        assert!((var - target_var).abs() < 3.0 * ((m4 - var * var) / n as f64).sqrt());
        // density mean by direct summation
        let dmean: f64 = (0..5000).map(|y| y as f64 * negbin_logpdf(y as f64, m, s2).exp()).sum();
        assert!((dmean - m).abs() < 1e-8);
    }
}
