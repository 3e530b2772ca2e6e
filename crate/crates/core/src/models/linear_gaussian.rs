//! Bivariate linear-Gaussian autoregression with an exact Kalman filter.
//!
//! `X_n | X_{n-1} ~ N(alpha x_{n-1}, sigma^T sigma)`, `Y_n | X_n ~ N(x_n, I_2)`,
//! started from a fixed `X_0`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::aig::{aig_run, estimate_lipschitz, norm, AigSchedule, OracleValue, RunOptions, Sense};
use crate::data::TimeSeriesData;
use crate::error::{Error, Result};
use crate::model::PompModel;
use crate::rng::{RngStream, StreamRng};

pub const PARAM_NAMES: [&str; 10] = [
    "alpha_1", "alpha_2", "alpha_3", "alpha_4", "sigma_11", "sigma_12", "sigma_21", "sigma_22",
    "x0_1", "x0_2",
];

/// Indices of `alpha_2` and `alpha_3`, the coordinates estimated in the toy study.
pub const ESTIMATED: [usize; 2] = [1, 2];

/// Parameters used to simulate the toy data.
pub const TRUE_PARAMS: [f64; 10] = [0.8, -0.5, 0.3, 0.9, 3.0, 0.0, -0.5, 2.0, -3.0, 4.0];

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// A linear-Gaussian state space model in general dimensions:
/// `x_n = F x_{n-1} + w`, `w ~ N(0, sigma^T sigma)`, `y_n = H x_n + v`, `v ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianSpec {
    pub alpha: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub obs_matrix: DMatrix<f64>,
    pub obs_cov: DMatrix<f64>,
    pub x0: DVector<f64>,
}

impl LinearGaussianSpec {
    /// The toy model's spec from its 10-vector of natural parameters.
    pub fn from_toy_params(theta: &[f64]) -> Self {
        Self {
            alpha: DMatrix::from_row_slice(2, 2, &theta[0..4]),
            sigma: DMatrix::from_row_slice(2, 2, &theta[4..8]),
            obs_matrix: DMatrix::identity(2, 2),
            obs_cov: DMatrix::identity(2, 2),
            x0: DVector::from_column_slice(&theta[8..10]),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.alpha.nrows()
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_matrix.nrows()
    }

    pub fn process_cov(&self) -> DMatrix<f64> {
        self.sigma.transpose() * &self.sigma
    }
}

/// Exact filtering products.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanResult {
    pub loglik: f64,
    pub pred_means: Vec<DVector<f64>>,
    pub pred_covs: Vec<DMatrix<f64>>,
    pub filter_means: Vec<DVector<f64>>,
    pub filter_covs: Vec<DMatrix<f64>>,
}

/// Exact log marginal density of `data` with a point-mass initial state.
pub fn kalman_loglik(spec: &LinearGaussianSpec, data: &TimeSeriesData) -> Result<KalmanResult> {
    let d = spec.state_dim();
    let q = spec.process_cov();
    let h = &spec.obs_matrix;
    let mut m = spec.x0.clone();
    let mut p = DMatrix::<f64>::zeros(d, d);
    let mut out = KalmanResult {
        loglik: 0.0,
        pred_means: Vec::with_capacity(data.len()),
        pred_covs: Vec::with_capacity(data.len()),
        filter_means: Vec::with_capacity(data.len()),
        filter_covs: Vec::with_capacity(data.len()),
    };
    for (n, y) in data.observations.iter().enumerate() {
        if y.len() != spec.obs_dim() {
            return Err(Error::Dimension {
                what: "observation width".into(),
                expected: spec.obs_dim(),
                got: y.len(),
            });
        }
        m = &spec.alpha * &m;
        p = &spec.alpha * &p * spec.alpha.transpose() + &q;
        p = (&p + p.transpose()) * 0.5;
        out.pred_means.push(m.clone());
        out.pred_covs.push(p.clone());

        let innov = DVector::from_column_slice(y) - h * &m;
        let s = h * &p * h.transpose() + &spec.obs_cov;
        let chol = s
            .clone()
            .cholesky()
            .ok_or(Error::SingularCovariance { n: n + 1 })?;
        let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        let sol = chol.solve(&innov);
        out.loglik += -0.5 * (y.len() as f64 * LN_2PI + log_det + innov.dot(&sol));

        let gain = &p * h.transpose() * chol.inverse();
        m = &m + &gain * innov;
        p = &p - &gain * h * &p;
        p = (&p + p.transpose()) * 0.5;
        out.filter_means.push(m.clone());
        out.filter_covs.push(p.clone());
    }
    Ok(out)
}

/// Central finite-difference gradient of the Kalman log-likelihood of the
/// toy model in the coordinates `coords`.
pub fn kalman_fd_gradient(
    theta: &[f64],
    data: &TimeSeriesData,
    coords: &[usize],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step {h} must be > 0")));
    }
    coords
        .iter()
        .map(|&i| {
            let mut up = theta.to_vec();
            let mut dn = theta.to_vec();
            up[i] += h;
            dn[i] -= h;
            let lu = kalman_loglik(&LinearGaussianSpec::from_toy_params(&up), data)?.loglik;
            let ld = kalman_loglik(&LinearGaussianSpec::from_toy_params(&dn), data)?.loglik;
            Ok((lu - ld) / (2.0 * h))
        })
        .collect()
}

/// Kalman log-likelihood of the toy model.
pub fn toy_loglik(theta: &[f64], data: &TimeSeriesData) -> Result<f64> {
    Ok(kalman_loglik(&LinearGaussianSpec::from_toy_params(theta), data)?.loglik)
}

/// Kalman maximum-likelihood estimate over `coords`.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanMle {
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub grad_norm: f64,
    pub lipschitz: f64,
}

/// Step for the finite-difference gradients used by [`kalman_mle`].
pub const FD_STEP: f64 = 1e-5;

/// Maximize the toy Kalman log-likelihood over `coords` by AIG (convex
/// schedule) on the finite-difference gradient, from a 3x3 grid of starts in
/// `[lower, upper]^2`, stopping at gradient norm `tol`. The best end point wins.
pub fn kalman_mle(
    base: &[f64],
    data: &TimeSeriesData,
    coords: &[usize],
    lower: f64,
    upper: f64,
    tol: f64,
) -> Result<KalmanMle> {
    let embed = |z: &[f64]| {
        let mut t = base.to_vec();
        for (&i, v) in coords.iter().zip(z) {
            t[i] = *v;
        }
        t
    };
    let grad = |z: &[f64]| kalman_fd_gradient(&embed(z), data, coords, FD_STEP);
    let d = coords.len();
    let mid = 0.5 * (lower + upper);
    let span = 0.5 * (upper - lower);
    let mut best: Option<KalmanMle> = None;
    let grid = [mid - 0.5 * span, mid, mid + 0.5 * span];
    for (gi, start) in (0..grid.len().pow(d as u32))
        .map(|mut k| {
            (0..d)
                .map(|_| {
                    let v = grid[k % 3];
                    k /= 3;
                    v
                })
                .collect::<Vec<f64>>()
        })
        .enumerate()
    {
        let lo: Vec<f64> = start.iter().map(|v| v - 0.05 * span).collect();
        let hi: Vec<f64> = start.iter().map(|v| v + 0.05 * span).collect();
        let Ok(lip) = estimate_lipschitz(grad, &lo, &hi, 20, gi as u64) else {
            continue;
        };
        let mut point = start.clone();
        let mut lip = lip;
        // restart with a larger constant whenever a run diverges
        for _ in 0..6 {
            let schedule = AigSchedule::convex(4000, lip, 1.0)?;
            let run = aig_run(
                |z, _| grad(z).map(OracleValue::gradient),
                &point,
                &schedule,
                Sense::Maximize,
                RunOptions {
                    grad_tolerance: Some(tol),
                },
            );
            let Ok(run) = run else {
                lip *= 4.0;
                continue;
            };
            point = run.best.clone();
            if run.converged_at.is_some() {
                break;
            }
        }
        let Ok(g) = grad(&point) else { continue };
        let Ok(ll) = toy_loglik(&embed(&point), data) else {
            continue;
        };
        let cand = KalmanMle {
            theta: embed(&point),
            loglik: ll,
            grad_norm: norm(&g),
            lipschitz: lip,
        };
        if best.as_ref().is_none_or(|b| cand.loglik > b.loglik) {
            best = Some(cand);
        }
    }
    best.ok_or_else(|| Error::InvalidArgument("no Kalman MLE start produced a finite likelihood".into()))
}

/// Exact simulation of `n` observations at unit time spacing from `t0 = 0`.
pub fn lg_simulate(spec: &LinearGaussianSpec, n: usize, seed: u64) -> Result<TimeSeriesData> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot simulate an empty series".into()));
    }
    let d = spec.state_dim();
    let k = spec.obs_dim();
    let obs_chol = if spec.obs_cov.iter().all(|v| *v == 0.0) {
        DMatrix::zeros(k, k)
    } else {
        spec.obs_cov
            .clone()
            .cholesky()
            .ok_or(Error::SingularCovariance { n: 0 })?
            .l()
    };
    let noise_t = spec.sigma.transpose();
    let mut rng = RngStream::new(seed, 0).rng();
    let mut x = spec.x0.clone();
    let mut obs = Vec::with_capacity(n);
    for _ in 0..n {
        let z = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        x = &spec.alpha * &x + &noise_t * z;
        let e = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let y = &spec.obs_matrix * &x + &obs_chol * e;
        obs.push(y.iter().copied().collect());
    }
    TimeSeriesData::new(0.0, (1..=n).map(|i| i as f64).collect(), obs)
}

/// The toy model as a [`PompModel`] over [`PARAM_NAMES`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearGaussianModel;

impl PompModel for LinearGaussianModel {
    fn param_names(&self) -> Vec<String> {
        PARAM_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn param_dim(&self) -> usize {
        PARAM_NAMES.len()
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn obs_dim(&self) -> usize {
        2
    }

    fn ivp_mask(&self) -> Vec<bool> {
        (0..PARAM_NAMES.len()).map(|i| i >= 8).collect()
    }

    fn init_state(&self, theta: &[f64], _t0: f64, x: &mut [f64], _rng: &mut StreamRng) {
        x[0] = theta[8];
        x[1] = theta[9];
    }

    fn step(
        &self,
        x: &mut [f64],
        theta: &[f64],
        t_prev: f64,
        t_next: f64,
        _data: &TimeSeriesData,
        rng: &mut StreamRng,
    ) {
        let steps = (t_next - t_prev).round().max(1.0) as usize;
        for _ in 0..steps {
            let z0: f64 = StandardNormal.sample(rng);
            let z1: f64 = StandardNormal.sample(rng);
            // sigma^T z
            let w0 = theta[4] * z0 + theta[6] * z1;
            let w1 = theta[5] * z0 + theta[7] * z1;
            let x0 = theta[0] * x[0] + theta[1] * x[1] + w0;
            let x1 = theta[2] * x[0] + theta[3] * x[1] + w1;
            x[0] = x0;
            x[1] = x1;
        }
    }

    fn meas_logpdf(&self, y: &[f64], x: &[f64], _theta: &[f64], _t: f64) -> f64 {
        let d0 = y[0] - x[0];
        let d1 = y[1] - x[1];
        -LN_2PI - 0.5 * (d0 * d0 + d1 * d1)
    }
}

/// The toy data set: 100 observations simulated at [`TRUE_PARAMS`].
pub fn toy_dataset(seed: u64) -> TimeSeriesData {
    lg_simulate(&LinearGaussianSpec::from_toy_params(&TRUE_PARAMS), 100, seed)
        .expect("toy simulation cannot fail")
}
