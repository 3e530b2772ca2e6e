//! Parameter vectors and the natural/estimation scale transforms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named parameter vector with initial-value-parameter (IVP) labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
    pub ivp_mask: Vec<bool>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>, names: Vec<String>, ivp_mask: Vec<bool>) -> Result<Self> {
        let p = values.len();
        if p == 0 {
            return Err(Error::InvalidArgument("parameter vector is empty".into()));
        }
        if names.len() != p {
            return Err(Error::Dimension {
                what: "parameter names".into(),
                expected: p,
                got: names.len(),
            });
        }
        if ivp_mask.len() != p {
            return Err(Error::Dimension {
                what: "IVP mask".into(),
                expected: p,
                got: ivp_mask.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "parameter `{}` is not finite",
                names[i]
            )));
        }
        Ok(Self {
            values,
            names,
            ivp_mask,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same names and IVP labels, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.names.clone(), self.ivp_mask.clone())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Per-coordinate transform from the natural scale to the estimation scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Log,
    Logit { lower: f64, upper: f64 },
}

impl Transform {
    pub fn logit_unit() -> Self {
        Transform::Logit {
            lower: 0.0,
            upper: 1.0,
        }
    }

    fn in_domain(&self, x: f64) -> bool {
        match *self {
            Transform::Identity => x.is_finite(),
            Transform::Log => x.is_finite() && x > 0.0,
            Transform::Logit { lower, upper } => x.is_finite() && x > lower && x < upper,
        }
    }

    /// Natural to estimation scale. `None` outside the domain.
    pub fn forward(&self, x: f64) -> Option<f64> {
        if !self.in_domain(x) {
            return None;
        }
        Some(match *self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
            Transform::Logit { lower, upper } => {
                let u = (x - lower) / (upper - lower);
                u.ln() - (-u).ln_1p()
            }
        })
    }

    /// Estimation to natural scale.
    pub fn inverse(&self, z: f64) -> f64 {
        match *self {
            Transform::Identity => z,
            Transform::Log => z.exp(),
            Transform::Logit { lower, upper } => {
                let u = if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                };
                lower + (upper - lower) * u
            }
        }
    }
}

/// One [`Transform`] per parameter coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTransform {
    pub coords: Vec<Transform>,
}

impl ParamTransform {
    pub fn identity(p: usize) -> Self {
        Self {
            coords: vec![Transform::Identity; p],
        }
    }

    pub fn new(coords: Vec<Transform>) -> Self {
        Self { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    fn check_len(&self, p: usize) -> Result<()> {
        if p != self.coords.len() {
            return Err(Error::Dimension {
                what: "transform length".into(),
                expected: self.coords.len(),
                got: p,
            });
        }
        Ok(())
    }

    /// Map raw natural-scale values to the estimation scale.
    pub fn forward_values(&self, natural: &[f64], names: &[String]) -> Result<Vec<f64>> {
        self.check_len(natural.len())?;
        natural
            .iter()
            .zip(&self.coords)
            .enumerate()
            .map(|(i, (&x, t))| {
                t.forward(x).ok_or_else(|| Error::TransformDomain {
                    index: i,
                    name: names.get(i).cloned().unwrap_or_else(|| format!("#{i}")),
                    value: x,
                })
            })
            .collect()
    }

    /// Map estimation-scale values back to the natural scale, writing into `out`.
    pub fn inverse_into(&self, est: &[f64], out: &mut [f64]) {
        for ((o, &z), t) in out.iter_mut().zip(est).zip(&self.coords) {
            *o = t.inverse(z);
        }
    }

    pub fn inverse_values(&self, est: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; est.len()];
        self.inverse_into(est, &mut out);
        out
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(|t| *t == Transform::Identity)
    }
}

/// Natural-scale vector to estimation scale.
pub fn transform_params(natural: &ParameterVector, t: &ParamTransform) -> Result<ParameterVector> {
    let values = t.forward_values(&natural.values, &natural.names)?;
    natural.with_values(values)
}

/// Estimation-scale vector back to the natural scale.
pub fn inverse_transform_params(
    est: &ParameterVector,
    t: &ParamTransform,
) -> Result<ParameterVector> {
    t.check_len(est.len())?;
    est.with_values(t.inverse_values(&est.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(values: Vec<f64>) -> ParameterVector {
        let p = values.len();
        ParameterVector::new(
            values,
            (0..p).map(|i| format!("p{i}")).collect(),
            vec![false; p],
        )
        .unwrap()
    }

    #[test]
    fn identity_is_identity() {
        let out = transform_params(&pv(vec![0.8, -0.5]), &ParamTransform::identity(2)).unwrap();
        assert_eq!(out.values, vec![0.8, -0.5]);
    }

    #[test]
    fn log_of_one_is_zero() {
        let t = ParamTransform::new(vec![Transform::Log]);
        assert_eq!(transform_params(&pv(vec![1.0]), &t).unwrap().values, vec![0.0]);
    }

    #[test]
    fn logit_midpoint_is_zero() {
        let t = ParamTransform::new(vec![Transform::logit_unit()]);
        assert_eq!(transform_params(&pv(vec![0.5]), &t).unwrap().values, vec![0.0]);
    }

    #[test]
    fn log_of_nonpositive_names_coordinate() {
        let t = ParamTransform::new(vec![Transform::Identity, Transform::Log]);
        let err = transform_params(&pv(vec![1.0, -2.0]), &t).unwrap_err();
        match err {
            Error::TransformDomain { index, name, .. } => {
                assert_eq!(index, 1);
                assert_eq!(name, "p1");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(ParameterVector::new(vec![], vec![], vec![]).is_err());
        assert!(ParameterVector::new(vec![1.0], vec![], vec![false]).is_err());
        assert!(ParameterVector::new(vec![f64::NAN], vec!["a".into()], vec![false]).is_err());
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    // 1000 random in-domain points per transform.
    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn identity_round_trip(x in -1e6f64..1e6) {
            let t = Transform::Identity;
            prop_assert!(rel(t.inverse(t.forward(x).unwrap()), x) <= 1e-12 || x == 0.0);
        }

        #[test]
        fn log_round_trip(x in 1e-8f64..1e8) {
            let t = Transform::Log;
            prop_assert!(rel(t.inverse(t.forward(x).unwrap()), x) <= 1e-12);
        }

        #[test]
        fn logit_round_trip(u in 1e-6f64..(1.0 - 1e-6), lower in -10.0f64..10.0, width in 0.1f64..10.0) {
            let t = Transform::Logit { lower, upper: lower + width };
            let x = lower + u * width;
            let back = t.inverse(t.forward(x).unwrap());
            // relative to the interval scale, which is what the transform can resolve
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(width).max(lower.abs()));
        }
    }
}
