//! Bootstrap particle filter, with and without perturbed parameters.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::csvio;
use crate::data::TimeSeriesData;
use crate::error::{Error, Result};
use crate::model::{check_dims, PompModel};
use crate::params::{ParamTransform, ParameterVector};
use crate::rng::{particle_stream, resample_stream, RngStream};
use crate::smc::resample::systematic_resample;
use crate::smc::weights::{effective_sample_size, normalize_logweights, pairwise_sum};

pub const FILTER_SCHEMA: &str = "aif.filter/1";

/// Stream-id bit separating parameter perturbation noise from state noise,
/// so the state noise is shared between perturbed and plain runs.
const PARAM_NOISE_BIT: u64 = 1 << 63;

/// Random-walk perturbation settings on the estimation scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbSpec {
    pub sigmas: Vec<f64>,
    pub cooling: f64,
    pub init_multiplier: f64,
    pub ivp_mask: Vec<bool>,
}

impl PerturbSpec {
    pub fn new(sigmas: Vec<f64>, cooling: f64, init_multiplier: f64, ivp_mask: Vec<bool>) -> Result<Self> {
        if sigmas.len() != ivp_mask.len() {
            return Err(Error::Dimension {
                what: "perturbation sigmas".into(),
                expected: ivp_mask.len(),
                got: sigmas.len(),
            });
        }
        if let Some(s) = sigmas.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("perturbation sd {s} must be >= 0")));
        }
        if !(cooling > 0.0 && cooling <= 1.0) {
            return Err(Error::InvalidArgument(format!("cooling rate {cooling} outside (0, 1]")));
        }
        if !(init_multiplier > 0.0) || !init_multiplier.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "initial scale multiplier {init_multiplier} must be > 0"
            )));
        }
        Ok(Self {
            sigmas,
            cooling,
            init_multiplier,
            ivp_mask,
        })
    }

    /// No perturbation at all.
    pub fn zero(ivp_mask: Vec<bool>) -> Self {
        Self {
            sigmas: vec![0.0; ivp_mask.len()],
            cooling: 0.5,
            init_multiplier: 1.0,
            ivp_mask,
        }
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    /// Cooling factor `c^(m-1)` for iteration `m >= 1`.
    pub fn cooling_factor(&self, iteration: usize) -> f64 {
        self.cooling.powi(iteration.saturating_sub(1) as i32)
    }

    /// Per-step random-walk sd at iteration `m`; zero on IVP coordinates.
    pub fn step_sds(&self, iteration: usize) -> Vec<f64> {
        let f = self.cooling_factor(iteration);
        self.sigmas
            .iter()
            .zip(&self.ivp_mask)
            .map(|(s, ivp)| if *ivp { 0.0 } else { s * f })
            .collect()
    }

    /// Initial-swarm sd at iteration `m`.
    pub fn init_sds(&self, iteration: usize) -> Vec<f64> {
        let f = self.init_multiplier * self.cooling_factor(iteration);
        self.sigmas.iter().map(|s| s * f).collect()
    }
}

/// Products of one filter run.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub loglik: f64,
    /// Per-time conditional log-likelihood `log mean w_n`.
    pub cond_logliks: Vec<f64>,
    pub ess_trace: Vec<f64>,
    /// Mean of the resampled parameter particles at each time (estimation scale).
    pub param_filter_means: Option<Vec<Vec<f64>>>,
    /// Times (1-based) where every weight was zero.
    pub degeneracy_flags: Vec<usize>,
    /// Final resampled parameter swarm, `J` rows (estimation scale).
    pub final_swarm: Option<Vec<Vec<f64>>>,
}

impl FilterOutput {
    /// Filter mean at 1-based time `lag`.
    pub fn filter_mean_at(&self, lag: usize) -> Option<&[f64]> {
        let means = self.param_filter_means.as_ref()?;
        means.get(lag.checked_sub(1)?).map(Vec::as_slice)
    }

    /// Write `(n, ess, theta_bar_1..p)` with the log-likelihood in the header comment.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# schema: {FILTER_SCHEMA}; loglik={}",
            csvio::fmt_f64(self.loglik)
        )?;
        let p = self
            .param_filter_means
            .as_ref()
            .and_then(|m| m.first())
            .map_or(0, Vec::len);
        let mut header = vec!["n".to_string(), "ess".to_string()];
        header.extend((1..=p).map(|i| format!("theta_bar_{i}")));
        let rows = self.ess_trace.iter().enumerate().map(|(n, ess)| {
            let mut r = vec![(n + 1) as f64, *ess];
            if let Some(m) = &self.param_filter_means {
                r.extend_from_slice(&m[n]);
            }
            r
        });
        csvio::write_table(w, &header, rows)
    }
}

/// Knobs shared by all filter entry points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterOptions {
    /// Continue past a step where every weight is zero, recording the time in
    /// `degeneracy_flags` and contributing `-inf` to the log-likelihood.
    pub allow_degeneracy: bool,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            allow_degeneracy: false,
        }
    }
}

enum ParamMode<'a> {
    /// Every particle uses the same natural-scale vector.
    Fixed(&'a [f64]),
    /// Per-particle estimation-scale vectors with random-walk perturbations.
    Swarm {
        centers: Vec<f64>,
        init_sds: Vec<f64>,
        step_sds: Vec<f64>,
        transform: ParamTransform,
    },
}

fn perturb(theta: &mut [f64], sds: &[f64], stream: RngStream) {
    if sds.iter().all(|s| *s == 0.0) {
        return;
    }
    let mut rng = stream.rng();
    for (v, sd) in theta.iter_mut().zip(sds) {
        if *sd > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += sd * z;
        }
    }
}

fn run<M: PompModel + ?Sized>(
    model: &M,
    data: &TimeSeriesData,
    j: usize,
    seed: u64,
    mode: ParamMode<'_>,
    opts: FilterOptions,
) -> Result<FilterOutput> {
    if j < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 particles, got {j}")));
    }
    let dx = model.state_dim();
    let p = model.param_dim();
    let n_obs = data.len();
    let t0 = data.t0;

    let (mut theta, transform, init_sds, step_sds) = match mode {
        ParamMode::Fixed(th) => (th.repeat(j), None, Vec::new(), Vec::new()),
        ParamMode::Swarm {
            centers,
            init_sds,
            step_sds,
            transform,
        } => (centers, Some(transform), init_sds, step_sds),
    };
    let perturbed = transform.is_some();
    let identity = transform.as_ref().is_none_or(ParamTransform::is_identity);
    let mut x = vec![0.0; j * dx];

    // natural-scale parameters of one particle
    let natural = |th: &[f64], buf: &mut Vec<f64>| {
        if let Some(t) = transform.as_ref().filter(|_| !identity) {
            buf.resize(th.len(), 0.0);
            t.inverse_into(th, buf);
        }
    };

    x.par_chunks_mut(dx)
        .zip(theta.par_chunks_mut(p))
        .enumerate()
        .for_each(|(jj, (xs, th))| {
            if perturbed {
                perturb(th, &init_sds, RngStream::new(seed, PARAM_NOISE_BIT | particle_stream(0, jj)));
            }
            let mut buf = Vec::new();
            natural(th, &mut buf);
            let th_nat: &[f64] = if identity { th } else { &buf };
            let mut rng = RngStream::new(seed, particle_stream(0, jj)).rng();
            model.init_state(th_nat, t0, xs, &mut rng);
        });

    let mut logw = vec![0.0; j];
    let mut cond = Vec::with_capacity(n_obs);
    let mut ess_trace = Vec::with_capacity(n_obs);
    let mut means = perturbed.then(|| Vec::with_capacity(n_obs));
    let mut flags = Vec::new();
    let mut x_next = vec![0.0; j * dx];
    let mut theta_next = vec![0.0; j * p];

    for n in 1..=n_obs {
        let t_prev = data.prev_time(n - 1);
        let t_now = data.times[n - 1];
        let y = &data.observations[n - 1];
        x.par_chunks_mut(dx)
            .zip(theta.par_chunks_mut(p))
            .zip(logw.par_iter_mut())
            .enumerate()
            .for_each(|(jj, ((xs, th), lw))| {
                if perturbed {
                    perturb(th, &step_sds, RngStream::new(seed, PARAM_NOISE_BIT | particle_stream(n, jj)));
                }
                let mut buf = Vec::new();
                natural(th, &mut buf);
                let th_nat: &[f64] = if identity { th } else { &buf };
                let mut rng = RngStream::new(seed, particle_stream(n, jj)).rng();
                model.step(xs, th_nat, t_prev, t_now, data, &mut rng);
                let l = model.meas_logpdf(y, xs, th_nat, t_now);
                *lw = if l.is_nan() { f64::NAN } else { l };
            });

        let normalized = match normalize_logweights(&logw, n) {
            Ok(r) => r,
            Err(Error::Degeneracy { .. }) if opts.allow_degeneracy => {
                flags.push(n);
                cond.push(f64::NEG_INFINITY);
                ess_trace.push(j as f64);
                if let Some(m) = means.as_mut() {
                    m.push(column_means(&theta, j, p));
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        cond.push(normalized.log_mean_weight);
        ess_trace.push(effective_sample_size(&normalized.weights).clamp(1.0, j as f64));

        let mut rng = RngStream::new(seed, resample_stream(n)).rng();
        let idx = systematic_resample(&normalized.weights, &mut rng)?;
        for (k, &src) in idx.iter().enumerate() {
            x_next[k * dx..(k + 1) * dx].copy_from_slice(&x[src * dx..(src + 1) * dx]);
            theta_next[k * p..(k + 1) * p].copy_from_slice(&theta[src * p..(src + 1) * p]);
        }
        std::mem::swap(&mut x, &mut x_next);
        std::mem::swap(&mut theta, &mut theta_next);

        if let Some(m) = means.as_mut() {
            m.push(column_means(&theta, j, p));
        }
    }

    let loglik = if cond.iter().any(|c| *c == f64::NEG_INFINITY) {
        f64::NEG_INFINITY
    } else {
        pairwise_sum(&cond)
    };
    let final_swarm = perturbed.then(|| theta.chunks(p).map(<[f64]>::to_vec).collect());
    Ok(FilterOutput {
        loglik,
        cond_logliks: cond,
        ess_trace,
        param_filter_means: means,
        degeneracy_flags: flags,
        final_swarm,
    })
}

fn column_means(theta: &[f64], j: usize, p: usize) -> Vec<f64> {
    let mut col = vec![0.0; j];
    (0..p)
        .map(|i| {
            for (k, c) in col.iter_mut().enumerate() {
                *c = theta[k * p + i];
            }
            pairwise_sum(&col) / j as f64
        })
        .collect()
}

/// Plain bootstrap filter at natural-scale parameters `theta`.
pub fn bootstrap_filter<M: PompModel + ?Sized>(
    model: &M,
    theta: &ParameterVector,
    data: &TimeSeriesData,
    j: usize,
    seed: u64,
) -> Result<FilterOutput> {
    bootstrap_filter_with(model, theta, data, j, seed, FilterOptions::default())
}

pub fn bootstrap_filter_with<M: PompModel + ?Sized>(
    model: &M,
    theta: &ParameterVector,
    data: &TimeSeriesData,
    j: usize,
    seed: u64,
    opts: FilterOptions,
) -> Result<FilterOutput> {
    check_dims(model, theta.len(), data)?;
    run(model, data, j, seed, ParamMode::Fixed(&theta.values), opts)
}

/// Perturbed-parameter filter centred at `center` (estimation scale).
///
/// The parameter swarm starts at `N(center, (C c^(m-1) sigma)^2)` and takes
/// random-walk steps of sd `c^(m-1) sigma` on non-IVP coordinates.
pub fn perturbed_filter<M: PompModel + ?Sized>(
    model: &M,
    center: &ParameterVector,
    data: &TimeSeriesData,
    j: usize,
    spec: &PerturbSpec,
    iteration: usize,
    seed: u64,
) -> Result<FilterOutput> {
    perturbed_filter_with(model, center, data, j, spec, iteration, seed, FilterOptions::default())
}

#[allow(clippy::too_many_arguments)]
pub fn perturbed_filter_with<M: PompModel + ?Sized>(
    model: &M,
    center: &ParameterVector,
    data: &TimeSeriesData,
    j: usize,
    spec: &PerturbSpec,
    iteration: usize,
    seed: u64,
    opts: FilterOptions,
) -> Result<FilterOutput> {
    let centers = center.values.repeat(j.max(1));
    swarm_filter(model, centers, data, j, spec, iteration, seed, opts)
}

/// Perturbed filter whose initial swarm is re-perturbed around `centers`
/// (`J x p`, row-major, estimation scale) rather than a single point.
#[allow(clippy::too_many_arguments)]
pub fn swarm_filter<M: PompModel + ?Sized>(
    model: &M,
    centers: Vec<f64>,
    data: &TimeSeriesData,
    j: usize,
    spec: &PerturbSpec,
    iteration: usize,
    seed: u64,
    opts: FilterOptions,
) -> Result<FilterOutput> {
    let p = model.param_dim();
    check_dims(model, p, data)?;
    if spec.len() != p {
        return Err(Error::Dimension {
            what: "perturbation sigmas".into(),
            expected: p,
            got: spec.len(),
        });
    }
    if centers.len() != j * p {
        return Err(Error::Dimension {
            what: "initial swarm".into(),
            expected: j * p,
            got: centers.len(),
        });
    }
    if iteration == 0 {
        return Err(Error::InvalidArgument("iterations are numbered from 1".into()));
    }
    run(
        model,
        data,
        j,
        seed,
        ParamMode::Swarm {
            centers,
            init_sds: spec.init_sds(iteration),
            step_sds: spec.step_sds(iteration),
            transform: model.transform(),
        },
        opts,
    )
}
