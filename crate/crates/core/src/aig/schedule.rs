//! Step-size sequences for the accelerated inexact gradient method.
//!
//! A schedule holds four coupled sequences indexed `k = 1..N`: the mixing
//! weights `alpha_k`, the aggregated-point steps `beta_k`, the main steps
//! `lambda_k` and `Gamma_k = prod_{i<=k} (1 - alpha_i)` (with `Gamma_1 = 1`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulePolicy {
    Nonconvex,
    Convex,
    Custom,
}

impl std::str::FromStr for SchedulePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonconvex" => Ok(Self::Nonconvex),
            "convex" => Ok(Self::Convex),
            "custom" => Ok(Self::Custom),
            other => Err(Error::InvalidArgument(format!("unknown schedule policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AigSchedule {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub policy: SchedulePolicy,
    pub lipschitz: f64,
    pub delta: f64,
}

/// `1 - ((k-1)/k)^(1+delta)` without cancellation.
fn alpha_k(k: usize, delta: f64) -> f64 {
    if k == 1 {
        return 1.0;
    }
    -((1.0 + delta) * (-1.0 / k as f64).ln_1p()).exp_m1()
}

fn gamma_k(k: usize, delta: f64) -> f64 {
    (k as f64).powf(-(1.0 + delta))
}

fn check_common(n: usize, lipschitz: f64, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("schedule length must be >= 1".into()));
    }
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz estimate {lipschitz} must be positive and finite"
        )));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1]")));
    }
    Ok(())
}

impl AigSchedule {
    /// General-purpose (nonconvex) policy with `delta = 1`:
    /// `beta_k = lambda_k = 1/(2L)`, `alpha_k = 1 - ((k-1)/k)^2`, `Gamma_k = 1/k^2`.
    pub fn nonconvex(n: usize, lipschitz: f64) -> Result<Self> {
        Self::nonconvex_with_delta(n, lipschitz, 1.0)
    }

    pub fn nonconvex_with_delta(n: usize, lipschitz: f64, delta: f64) -> Result<Self> {
        check_common(n, lipschitz, delta)?;
        let beta = 1.0 / (2.0 * lipschitz);
        Ok(Self {
            alphas: (1..=n).map(|k| alpha_k(k, delta)).collect(),
            betas: vec![beta; n],
            lambdas: vec![beta; n],
            gammas: (1..=n).map(|k| gamma_k(k, delta)).collect(),
            policy: SchedulePolicy::Nonconvex,
            lipschitz,
            delta,
        })
    }

    /// Convex policy: `lambda_k = c (k^(1+delta) - (k-1)^(1+delta))` with `c`
    /// the largest constant keeping `alpha_k lambda_k <= beta_k = 1/(2L)` for
    /// every `k <= N`.
    pub fn convex(n: usize, lipschitz: f64, delta: f64) -> Result<Self> {
        check_common(n, lipschitz, delta)?;
        let beta = 1.0 / (2.0 * lipschitz);
        let alphas: Vec<f64> = (1..=n).map(|k| alpha_k(k, delta)).collect();
        // k^(1+delta) - (k-1)^(1+delta) = alpha_k k^(1+delta)
        let increments: Vec<f64> = alphas
            .iter()
            .enumerate()
            .map(|(i, a)| a * ((i + 1) as f64).powf(1.0 + delta))
            .collect();
        let worst = alphas
            .iter()
            .zip(&increments)
            .map(|(a, u)| a * u)
            .fold(0.0, f64::max);
        // shave a few ulps so the product never rounds above beta
        let c = beta / worst * (1.0 - 4.0 * f64::EPSILON);
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidArgument(format!("infeasible step constant {c}")));
        }
        Ok(Self {
            lambdas: increments.iter().map(|u| c * u).collect(),
            betas: vec![beta; n],
            gammas: (1..=n).map(|k| gamma_k(k, delta)).collect(),
            alphas,
            policy: SchedulePolicy::Convex,
            lipschitz,
            delta,
        })
    }

    /// User-supplied sequences; `Gamma` follows from the recursion.
    pub fn custom(alphas: Vec<f64>, betas: Vec<f64>, lambdas: Vec<f64>, lipschitz: f64) -> Result<Self> {
        let n = alphas.len();
        if n == 0 || betas.len() != n || lambdas.len() != n {
            return Err(Error::InvalidArgument(
                "custom schedule sequences must be non-empty and of equal length".into(),
            ));
        }
        if alphas[0] != 1.0 {
            return Err(Error::InvalidArgument("alpha_1 must equal 1".into()));
        }
        if let Some(a) = alphas[1..].iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(Error::InvalidArgument(format!("alpha {a} outside (0, 1]")));
        }
        if betas.iter().chain(&lambdas).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidArgument("step sizes must be finite and >= 0".into()));
        }
        let mut gammas = Vec::with_capacity(n);
        gammas.push(1.0);
        for k in 1..n {
            gammas.push((1.0 - alphas[k]) * gammas[k - 1]);
        }
        Ok(Self {
            alphas,
            betas,
            lambdas,
            gammas,
            policy: SchedulePolicy::Custom,
            lipschitz,
            delta: 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }
}

/// Validity coefficients `C_k` under both readings of the tail sum.
#[derive(Debug, Clone, PartialEq)]
pub struct CkReport {
    /// `1 - L[lambda_k + (lambda_k - beta_k)^2 / (2 alpha_k Gamma_k lambda_k) * sum_{t>=k} Gamma_t]`.
    pub coefficients: Vec<f64>,
    /// Same with `sum_{t>=k} 1/Gamma_t` in the tail.
    pub inverse_tail: Vec<f64>,
    /// 1-based indices with a non-positive coefficient.
    pub nonpositive: Vec<usize>,
}

pub fn ck_coefficients(s: &AigSchedule, lipschitz: f64) -> CkReport {
    let n = s.len();
    let mut tail = vec![0.0; n];
    let mut inv_tail = vec![0.0; n];
    let (mut acc, mut inv_acc) = (0.0, 0.0);
    for k in (0..n).rev() {
        acc += s.gammas[k];
        inv_acc += 1.0 / s.gammas[k];
        tail[k] = acc;
        inv_tail[k] = inv_acc;
    }
    let coef = |k: usize, t: f64| {
        let (l, b, a, g) = (s.lambdas[k], s.betas[k], s.alphas[k], s.gammas[k]);
        let penalty = if l == b { 0.0 } else { (l - b).powi(2) / (2.0 * a * g * l) * t };
        1.0 - lipschitz * (l + penalty)
    };
    let coefficients: Vec<f64> = (0..n).map(|k| coef(k, tail[k])).collect();
    let inverse_tail = (0..n).map(|k| coef(k, inv_tail[k])).collect();
    let nonpositive = coefficients
        .iter()
        .enumerate()
        .filter(|(_, c)| **c <= 0.0)
        .map(|(k, _)| k + 1)
        .collect();
    CkReport {
        coefficients,
        inverse_tail,
        nonpositive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn base_case() {
        let s = AigSchedule::nonconvex(1, 2.0).unwrap();
        assert_eq!(s.alphas, vec![1.0]);
        assert_eq!(s.gammas, vec![1.0]);
        assert_eq!(s.betas, vec![0.25]);
        assert_eq!(s.lambdas, s.betas);
    }

    #[test]
    fn second_step_values() {
        let s = AigSchedule::nonconvex(2, 1.0).unwrap();
        assert_relative_eq!(s.alphas[1], 0.75, max_relative = 1e-15);
        assert_relative_eq!(s.gammas[1], 0.25, max_relative = 1e-15);
        let lemma = s.alphas[0] / s.gammas[0] + s.alphas[1] / s.gammas[1];
        assert_relative_eq!(lemma, 4.0, max_relative = 1e-15);
        assert_relative_eq!(lemma, 1.0 / s.gammas[1], max_relative = 1e-15);
    }

    #[test]
    fn nonconvex_ck_is_half() {
        let s = AigSchedule::nonconvex(10, 1.0).unwrap();
        let r = ck_coefficients(&s, 1.0);
        for c in &r.coefficients {
            assert_eq!(*c, 0.5);
            assert!(*c > 0.25);
        }
        assert!(r.nonpositive.is_empty());
    }

    #[test]
    fn lambda_above_beta_penalized() {
        let s0 = AigSchedule::nonconvex(10, 1.0).unwrap();
        let s = AigSchedule::custom(
            s0.alphas.clone(),
            s0.betas.clone(),
            s0.betas.iter().map(|b| 2.0 * b).collect(),
            1.0,
        )
        .unwrap();
        let r = ck_coefficients(&s, 1.0);
        for (c, l) in r.coefficients.iter().zip(&s.lambdas) {
            assert!(*c < 1.0 - l);
        }
    }

    #[test]
    fn convex_worked_example() {
        let s = AigSchedule::convex(3, 1.0, 1.0).unwrap();
        assert_relative_eq!(s.alphas[1], 0.75, max_relative = 1e-15);
        assert_relative_eq!(s.alphas[2], 5.0 / 9.0, max_relative = 1e-15);
        // lambda proportional to (1, 3, 5)
        assert_relative_eq!(s.lambdas[1] / s.lambdas[0], 3.0, max_relative = 1e-14);
        assert_relative_eq!(s.lambdas[2] / s.lambdas[0], 5.0, max_relative = 1e-14);
        // largest alpha*lambda (k = 3, proportional to 25/9) sits at beta = 1/2
        let prods: Vec<f64> = s.alphas.iter().zip(&s.lambdas).map(|(a, l)| a * l).collect();
        assert_relative_eq!(prods[2], 0.5, max_relative = 1e-14);
        assert_relative_eq!(prods[1] / prods[0], 9.0 / 4.0, max_relative = 1e-14);
        assert!(prods.iter().all(|p| *p <= 0.5));
    }

    #[test]
    fn convex_gamma_closed_form() {
        let s = AigSchedule::convex(10, 1.0, 1.0).unwrap();
        assert_relative_eq!(s.gammas[9], 0.01, max_relative = 1e-15);
    }

    #[test]
    fn convex_equality_chain() {
        for delta in [0.25, 0.5, 1.0] {
            let s = AigSchedule::convex(100, 3.0, delta).unwrap();
            let r0 = s.alphas[0] / (s.lambdas[0] * s.gammas[0]);
            for k in 0..100 {
                let r = s.alphas[k] / (s.lambdas[k] * s.gammas[k]);
                assert_relative_eq!(r, r0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(AigSchedule::nonconvex(0, 1.0).is_err());
        assert!(AigSchedule::nonconvex(3, 0.0).is_err());
        assert!(AigSchedule::nonconvex(3, -1.0).is_err());
        assert!(AigSchedule::convex(3, 1.0, 0.0).is_err());
        assert!(AigSchedule::convex(3, 1.0, 1.5).is_err());
        assert!(AigSchedule::custom(vec![0.5], vec![1.0], vec![1.0], 1.0).is_err());
    }

    #[test]
    fn custom_gamma_recursion() {
        let s = AigSchedule::custom(vec![1.0, 0.5, 0.5], vec![0.1; 3], vec![0.1; 3], 1.0).unwrap();
        assert_eq!(s.gammas, vec![1.0, 0.5, 0.25]);
    }
}
