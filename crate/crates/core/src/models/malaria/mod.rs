//! SEIH³QS malaria transmission model with relapse, seasonal and rainfall
//! driven force of infection, and negative binomial monthly case reports.
//!
//! State: `(S, E, I, Q, H1, H2, H3, kappa, mu_SE)` plus an accumulator of new
//! cases since the last observation. Time is in months.

mod negbin;
mod spline;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::data::{Covariates, TimeSeriesData};
use crate::error::{Error, Result};
use crate::model::PompModel;
use crate::params::{ParamTransform, Transform};
use crate::rng::{RngStream, StreamRng};

pub use negbin::negbin_logpdf;
pub use spline::periodic_bspline_basis;

pub const N_SPLINE: usize = 6;
pub const SPLINE_PERIOD: f64 = 12.0;
pub const EULER_STEP: f64 = 1.0 / 20.0;

/// Fraction of clamped Euler steps above which a simulation carries a warning.
pub const CLAMP_WARN_FRACTION: f64 = 0.01;

pub const STATE_NAMES: [&str; 9] = ["S", "E", "I", "Q", "H1", "H2", "H3", "kappa", "mu_SE"];
const CASES: usize = 9;

pub const PARAM_NAMES: [&str; 29] = [
    "delta", "mu_EI", "mu_IS", "mu_IQ", "mu_IH", "mu_HI", "mu_QS", "a", "b", "q", "tau_D", "b_1",
    "b_2", "b_3", "b_4", "b_5", "b_6", "b_r", "sigma_P", "rho", "sigma_obs", "S_0", "E_0", "I_0",
    "Q_0", "H1_0", "H2_0", "H3_0", "mu_SE_0",
];

/// First IVP index; `S_0..H3_0` are initial class fractions (renormalized to
/// sum to one) and `mu_SE_0` is the initial `kappa = mu_SE`.
pub const FIRST_IVP: usize = 21;

/// Synthetic parameter set used for the self-consistency experiments.
pub const SYNTHETIC_PARAMS: [f64; 29] = [
    0.0017, 1.2, 0.8, 0.4, 1.0, 0.25, 0.15, 0.3, 0.5, 0.1, 0.5, 1.4, 1.9, 2.3, 2.0, 1.5, 1.2,
    0.004, 0.15, 0.02, 0.15, 0.55, 0.01, 0.02, 0.3, 0.04, 0.04, 0.04, 0.1,
];

/// Natural-scale parameters of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct MalariaSpec {
    pub delta: f64,
    pub mu_ei: f64,
    pub mu_is: f64,
    pub mu_iq: f64,
    pub mu_ih: f64,
    pub mu_hi: f64,
    pub mu_qs: f64,
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub tau_d: f64,
    pub spline: [f64; N_SPLINE],
    pub b_r: f64,
    pub sigma_p: f64,
    pub rho: f64,
    pub sigma_obs: f64,
    /// `S_0..H3_0` as fractions of the population.
    pub init_fractions: [f64; 7],
    pub mu_se0: f64,
    pub population: f64,
    pub h: f64,
}

impl MalariaSpec {
    pub fn from_params(theta: &[f64], population: f64) -> Self {
        let mut spline = [0.0; N_SPLINE];
        spline.copy_from_slice(&theta[11..17]);
        let mut init_fractions = [0.0; 7];
        init_fractions.copy_from_slice(&theta[21..28]);
        Self {
            delta: theta[0],
            mu_ei: theta[1],
            mu_is: theta[2],
            mu_iq: theta[3],
            mu_ih: theta[4],
            mu_hi: theta[5],
            mu_qs: theta[6],
            a: theta[7],
            b: theta[8],
            q: theta[9],
            tau_d: theta[10],
            spline,
            b_r: theta[17],
            sigma_p: theta[18],
            rho: theta[19],
            sigma_obs: theta[20],
            init_fractions,
            mu_se0: theta[28],
            population,
            h: EULER_STEP,
        }
    }

    pub fn to_params(&self) -> Vec<f64> {
        let mut v = vec![
            self.delta, self.mu_ei, self.mu_is, self.mu_iq, self.mu_ih, self.mu_hi, self.mu_qs,
            self.a, self.b, self.q, self.tau_d,
        ];
        v.extend_from_slice(&self.spline);
        v.extend([self.b_r, self.sigma_p, self.rho, self.sigma_obs]);
        v.extend_from_slice(&self.init_fractions);
        v.push(self.mu_se0);
        v
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("b", self.b), ("q", self.q), ("rho", self.rho)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(self.h > 0.0) || !(self.population > 0.0) || !(self.tau_d > 0.0) {
            return Err(Error::InvalidArgument(
                "need positive Euler step, population and tau_D".into(),
            ));
        }
        if self.init_fractions.iter().any(|f| !(*f >= 0.0)) || self.init_fractions.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument("initial fractions must be nonnegative and not all zero".into()));
        }
        Ok(())
    }

    /// Initial latent state in persons (plus `kappa`, `mu_SE`).
    pub fn initial_state(&self) -> [f64; 9] {
        let total: f64 = self.init_fractions.iter().sum();
        let mut x = [0.0; 9];
        for (xi, f) in x.iter_mut().zip(&self.init_fractions) {
            *xi = self.population * f / total;
        }
        x[7] = self.mu_se0;
        x[8] = self.mu_se0;
        x
    }

    /// Seasonal and rainfall factor `exp(sum b_i s_i(t) + b_r R(t))`.
    pub fn transmission_factor(&self, t: f64, rainfall: f64) -> f64 {
        let s = periodic_bspline_basis(t, N_SPLINE, SPLINE_PERIOD);
        let lin: f64 = s.iter().zip(&self.spline).map(|(si, bi)| si * bi).sum();
        (lin + self.b_r * rainfall).exp()
    }

    /// Deterministic part of the latent force, `(I + qQ)/P * factor`.
    pub fn force_rate(&self, x: &[f64], t: f64, rainfall: f64) -> f64 {
        (x[2] + self.q * x[3]) / self.population * self.transmission_factor(t, rainfall)
    }
}

/// Time derivative of `(S, E, I, Q, H1, H2, H3, kappa, mu_SE)` at latent force
/// `lambda`, with population growth rate `dp_dt`.
pub fn malaria_drift(x: &[f64], p: &MalariaSpec, lambda: f64, dp_dt: f64) -> [f64; 9] {
    let [s, e, i, q, h1, h2, h3, kappa, mu_se] = [x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8]];
    let d = p.delta;
    let stage = 3.0 * p.mu_hi;
    [
        d * p.population + dp_dt + p.mu_is * i + p.mu_qs * q + p.a * p.mu_ih * i + p.b * p.mu_ei * e
            - mu_se * s
            - d * s,
        mu_se * s - p.mu_ei * e - d * e,
        (1.0 - p.b) * p.mu_ei * e + stage * h3 - (p.mu_ih + p.mu_is + p.mu_iq) * i - d * i,
        p.mu_iq * i - p.mu_qs * q - d * q,
        (1.0 - p.a) * p.mu_ih * i - stage * h1 - d * h1,
        stage * h1 - stage * h2 - d * h2,
        stage * h2 - stage * h3 - d * h3,
        (lambda - kappa) / p.tau_d,
        (kappa - mu_se) / p.tau_d,
    ]
}

/// Latent force increment over one Euler step of length `h`:
/// `force_rate * dGamma` with `dGamma ~ Gamma(h / sigma_P^2, sigma_P^2)`.
pub fn latent_force<R: Rng + ?Sized>(
    x: &[f64],
    p: &MalariaSpec,
    t: f64,
    rainfall: f64,
    h: f64,
    rng: &mut R,
) -> f64 {
    let rate = p.force_rate(x, t, rainfall);
    rate * gamma_increment(p.sigma_p, h, rng)
}

fn gamma_increment<R: Rng + ?Sized>(sigma_p: f64, h: f64, rng: &mut R) -> f64 {
    let v = sigma_p * sigma_p;
    if v < 1e-12 {
        return h;
    }
    Gamma::new(h / v, v).map_or(h, |g| g.sample(rng))
}

/// One Euler–Maruyama step. Returns whether any class had to be clamped at zero.
fn euler_step(x: &mut [f64], p: &MalariaSpec, t: f64, rainfall: f64, h: f64, rng: &mut StreamRng) -> bool {
    let force = latent_force(x, p, t, rainfall, h, rng);
    let lambda = force / h;
    let dx = malaria_drift(x, p, lambda, 0.0);
    x[CASES] += h * (p.mu_ei * x[1] + 3.0 * p.mu_hi * x[6]);
    let mut clamped = false;
    for (xi, di) in x.iter_mut().zip(dx) {
        *xi += h * di;
        if *xi < 0.0 {
            *xi = 0.0;
            clamped = true;
        }
    }
    clamped
}

/// The malaria model with constant population and an optional monthly rainfall series.
#[derive(Debug, Default)]
pub struct MalariaModel {
    pub population: f64,
    pub rainfall: Option<Covariates>,
    steps: AtomicU64,
    clamped: AtomicU64,
}

impl Clone for MalariaModel {
    fn clone(&self) -> Self {
        MalariaModel::new(self.population, self.rainfall.clone())
    }
}

impl MalariaModel {
    pub fn new(population: f64, rainfall: Option<Covariates>) -> Self {
        Self {
            population,
            rainfall,
            steps: AtomicU64::new(0),
            clamped: AtomicU64::new(0),
        }
    }

    pub fn rainfall_at(&self, t: f64) -> f64 {
        self.rainfall.as_ref().map_or(0.0, |c| c.at(t)[0])
    }

    pub fn spec(&self, theta: &[f64]) -> MalariaSpec {
        MalariaSpec::from_params(theta, self.population)
    }

    /// `(clamped steps, total steps)` since construction or the last reset.
    pub fn clamp_counts(&self) -> (u64, u64) {
        (self.clamped.load(Ordering::Relaxed), self.steps.load(Ordering::Relaxed))
    }

    pub fn reset_counts(&self) {
        self.steps.store(0, Ordering::Relaxed);
        self.clamped.store(0, Ordering::Relaxed);
    }

    fn advance(&self, x: &mut [f64], p: &MalariaSpec, t_prev: f64, t_next: f64, rng: &mut StreamRng) -> (u64, u64) {
        x[CASES] = 0.0;
        let n = ((t_next - t_prev) / p.h).round().max(1.0) as usize;
        let h = (t_next - t_prev) / n as f64;
        let mut clamped = 0;
        for k in 0..n {
            let t = t_prev + k as f64 * h;
            if euler_step(x, p, t, self.rainfall_at(t), h, rng) {
                clamped += 1;
            }
        }
        (clamped, n as u64)
    }

    /// Synthetic monthly rainfall: a monsoon-like annual cycle (mm).
    pub fn synthetic_rainfall(months: usize) -> Covariates {
        let times: Vec<f64> = (0..=months).map(|m| m as f64).collect();
        let rows = times
            .iter()
            .map(|t| {
                let phase = 2.0 * std::f64::consts::PI * (t - 4.0) / 12.0;
                vec![(120.0 - 140.0 * phase.cos()).max(5.0)]
            })
            .collect();
        Covariates::new(times, vec!["rainfall".into()], rows).expect("valid synthetic rainfall")
    }
}

impl PompModel for MalariaModel {
    fn param_names(&self) -> Vec<String> {
        PARAM_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn param_dim(&self) -> usize {
        PARAM_NAMES.len()
    }

    fn state_dim(&self) -> usize {
        CASES + 1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn ivp_mask(&self) -> Vec<bool> {
        (0..PARAM_NAMES.len()).map(|i| i >= FIRST_IVP).collect()
    }

    fn transform(&self) -> ParamTransform {
        ParamTransform::new(
            (0..PARAM_NAMES.len())
                .map(|i| match i {
                    7 | 8 | 9 | 19 => Transform::logit_unit(),
                    11..=17 => Transform::Identity,
                    _ => Transform::Log,
                })
                .collect(),
        )
    }

    fn init_state(&self, theta: &[f64], _t0: f64, x: &mut [f64], _rng: &mut StreamRng) {
        let init = self.spec(theta).initial_state();
        x[..9].copy_from_slice(&init);
        x[CASES] = 0.0;
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
        let p = self.spec(theta);
        let (c, n) = self.advance(x, &p, t_prev, t_next, rng);
        self.steps.fetch_add(n, Ordering::Relaxed);
        self.clamped.fetch_add(c, Ordering::Relaxed);
    }

    fn meas_logpdf(&self, y: &[f64], x: &[f64], theta: &[f64], _t: f64) -> f64 {
        let mean = theta[19] * x[CASES];
        let s = theta[20];
        negbin_logpdf(y[0], mean, s * s)
    }
}

/// A simulated latent path with its monthly reports.
#[derive(Debug, Clone, PartialEq)]
pub struct MalariaPath {
    pub times: Vec<f64>,
    /// Latent state at each observation time (without the case accumulator).
    pub states: Vec<[f64; 9]>,
    /// `M_n = rho * integral of new cases` per month.
    pub expected_cases: Vec<f64>,
    pub observed: Vec<f64>,
    pub clamped_steps: u64,
    pub total_steps: u64,
    pub warning: Option<String>,
}

impl MalariaPath {
    pub fn dataset(&self) -> Result<TimeSeriesData> {
        TimeSeriesData::new(
            0.0,
            self.times.clone(),
            self.observed.iter().map(|y| vec![*y]).collect(),
        )
    }
}

/// Simulate `months` monthly observations from `t = 0` with Euler–Maruyama
/// steps of `theta`'s spec and negative binomial reports.
pub fn euler_maruyama_simulate(
    model: &MalariaModel,
    theta: &[f64],
    months: usize,
    seed: u64,
) -> Result<MalariaPath> {
    if months == 0 {
        return Err(Error::InvalidArgument("cannot simulate an empty series".into()));
    }
    if theta.len() != PARAM_NAMES.len() {
        return Err(Error::Dimension {
            what: "malaria parameters".into(),
            expected: PARAM_NAMES.len(),
            got: theta.len(),
        });
    }
    let p = model.spec(theta);
    p.validate()?;
    let mut rng = RngStream::new(seed, 0).rng();
    let mut obs_rng = RngStream::new(seed, 1).rng();
    let mut x = [0.0; CASES + 1];
    x[..9].copy_from_slice(&p.initial_state());
    let mut path = MalariaPath {
        times: Vec::with_capacity(months),
        states: Vec::with_capacity(months),
        expected_cases: Vec::with_capacity(months),
        observed: Vec::with_capacity(months),
        clamped_steps: 0,
        total_steps: 0,
        warning: None,
    };
    for n in 1..=months {
        let (c, k) = model.advance(&mut x, &p, (n - 1) as f64, n as f64, &mut rng);
        path.clamped_steps += c;
        path.total_steps += k;
        let mean = p.rho * x[CASES];
        path.times.push(n as f64);
        let mut state = [0.0; 9];
        state.copy_from_slice(&x[..9]);
        path.states.push(state);
        path.expected_cases.push(mean);
        path.observed.push(draw_negbin(mean, p.sigma_obs * p.sigma_obs, &mut obs_rng));
    }
    let frac = path.clamped_steps as f64 / path.total_steps as f64;
    if frac > CLAMP_WARN_FRACTION {
        path.warning = Some(format!(
            "{} of {} Euler steps ({:.1}%) clamped a compartment at zero",
            path.clamped_steps,
            path.total_steps,
            100.0 * frac
        ));
    }
    Ok(path)
}

fn draw_negbin(mean: f64, sigma2: f64, rng: &mut StreamRng) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let rate = if sigma2 > 0.0 {
        let k = 1.0 / sigma2;
        Gamma::new(k, mean / k).map_or(mean, |g| g.sample(rng))
    } else {
        mean
    };
    if rate <= 0.0 {
        return 0.0;
    }
    rand_distr::Poisson::new(rate).map_or(0.0, |d| d.sample(rng))
}
