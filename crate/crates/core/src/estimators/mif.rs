//! AIF, IF1 and IF2 iteration drivers.

use std::io::Write;
use std::time::Instant;

use crate::aig::{aig_step, AigState};
use crate::csvio;
use crate::data::TimeSeriesData;
use crate::error::{Error, Result};
use crate::estimators::config::{MifConfig, ScoreCenter};
use crate::model::{check_dims, PompModel};
use crate::params::ParameterVector;
use crate::rng::{derive_seed, tags};
use crate::smc::{estimate_score, perturbed_filter, swarm_filter, FilterOptions, FilterOutput};

pub const TRACE_SCHEMA: &str = "aif.estimation-trace/1";

/// State after iteration `m`. All vectors are on the estimation scale.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub m: usize,
    pub theta: Vec<f64>,
    pub theta_ag: Vec<f64>,
    pub theta_md: Vec<f64>,
    pub score: Vec<f64>,
    /// Log-likelihood estimate from this iteration's perturbed filter.
    pub loglik: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationTrace {
    pub method: &'static str,
    pub theta0: Vec<f64>,
    pub records: Vec<IterationRecord>,
}

impl EstimationTrace {
    /// The method's point estimate: `theta^ag_M` for AIF, `theta_M` otherwise
    /// (the two coincide for IF1 and IF2).
    pub fn estimate(&self) -> &[f64] {
        self.records
            .last()
            .map_or(&self.theta0, |r| &r.theta_ag)
    }

    pub fn total_seconds(&self) -> f64 {
        self.records.iter().map(|r| r.wall_seconds).sum()
    }

    /// `(m, loglik, wall_seconds, theta_1..p, theta_ag_1..p, theta_md_1..p, score_1..p)`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema: {TRACE_SCHEMA}; method={}; scale=estimation", self.method)?;
        let p = self.theta0.len();
        let mut header: Vec<String> = ["m", "loglik", "wall_seconds"].iter().map(|s| s.to_string()).collect();
        for prefix in ["theta", "theta_ag", "theta_md", "score"] {
            header.extend((1..=p).map(|i| format!("{prefix}_{i}")));
        }
        let rows = self.records.iter().map(|r| {
            let mut row = vec![r.m as f64, r.loglik, r.wall_seconds];
            row.extend_from_slice(&r.theta);
            row.extend_from_slice(&r.theta_ag);
            row.extend_from_slice(&r.theta_md);
            row.extend_from_slice(&r.score);
            row
        });
        csvio::write_table(w, &header, rows)
    }
}

/// Seed of the filter run at iteration `m`.
pub fn iteration_seed(seed: u64, m: usize) -> u64 {
    derive_seed(seed, tags::ITERATION, m as u64)
}

fn to_estimation<M: PompModel + ?Sized>(model: &M, theta0: &ParameterVector) -> Result<Vec<f64>> {
    model.transform().forward_values(&theta0.values, &theta0.names)
}

fn labelled<M: PompModel + ?Sized>(model: &M, est: Vec<f64>) -> ParameterVector {
    ParameterVector {
        values: est,
        names: model.param_names(),
        ivp_mask: model.ivp_mask(),
    }
}

fn check<M: PompModel + ?Sized>(
    model: &M,
    data: &TimeSeriesData,
    theta0: &ParameterVector,
    cfg: &MifConfig,
) -> Result<()> {
    check_dims(model, theta0.len(), data)?;
    cfg.validate(data.len())?;
    if cfg.perturb.len() != theta0.len() {
        return Err(Error::Dimension {
            what: "perturbation sigmas".into(),
            expected: theta0.len(),
            got: cfg.perturb.len(),
        });
    }
    Ok(())
}

fn set_ivps(target: &mut [f64], out: &FilterOutput, ivp_mask: &[bool], lag: usize) {
    if let Some(mean) = out.filter_mean_at(lag) {
        for (i, ivp) in ivp_mask.iter().enumerate() {
            if *ivp {
                target[i] = mean[i];
            }
        }
    }
}

fn filter_error(e: Error, m: usize) -> Error {
    e.at_iteration(m)
}

/// Accelerated iterated filtering from natural-scale `theta0`.
///
/// Each iteration centres a perturbed filter on `theta^md_m`, turns its
/// filter means into a score `S_m`, and takes an ascent step:
/// `theta_m = theta_{m-1} + lambda_m S_m`, `theta^ag_m = theta^md_m + beta_m S_m`.
/// IVP coordinates are reset to their filter mean at the configured lag.
pub fn aif_run<M: PompModel + ?Sized>(
    model: &M,
    data: &TimeSeriesData,
    theta0: &ParameterVector,
    cfg: &MifConfig,
) -> Result<EstimationTrace> {
    check(model, data, theta0, cfg)?;
    let schedule = cfg.schedule.build(cfg.iterations)?;
    let ivp_mask = model.ivp_mask();
    let lag = cfg.lag(data.len());
    let start = to_estimation(model, theta0)?;
    let mut state = AigState::new(start.clone());
    let mut prev_md = start.clone();
    let mut records = Vec::with_capacity(cfg.iterations);
    for m in 1..=cfg.iterations {
        let clock = Instant::now();
        let md = state.next_md(&schedule)?;
        let out = perturbed_filter(
            model,
            &labelled(model, md.clone()),
            data,
            cfg.particles,
            &cfg.perturb,
            m,
            iteration_seed(cfg.seed, m),
        )
        .map_err(|e| filter_error(e, m))?;
        let reference = match cfg.score_center {
            ScoreCenter::Current => &md,
            ScoreCenter::Previous => &prev_md,
        };
        let score = estimate_score(&out, reference, &cfg.perturb, m, cfg.score_mode)?;
        let descent: Vec<f64> = score.iter().map(|s| -s).collect();
        state = aig_step(&state, &schedule, &descent).map_err(|e| e.at_iteration(m))?;
        set_ivps(&mut state.theta, &out, &ivp_mask, lag);
        set_ivps(&mut state.theta_ag, &out, &ivp_mask, lag);
        prev_md = md.clone();
        records.push(IterationRecord {
            m,
            theta: state.theta.clone(),
            theta_ag: state.theta_ag.clone(),
            theta_md: md,
            score,
            loglik: out.loglik,
            wall_seconds: clock.elapsed().as_secs_f64(),
        });
    }
    Ok(EstimationTrace {
        method: "aif",
        theta0: start,
        records,
    })
}

/// First-order iterated filtering: `theta_m = theta_{m-1} + gamma_m S_m`.
pub fn if1_run<M: PompModel + ?Sized>(
    model: &M,
    data: &TimeSeriesData,
    theta0: &ParameterVector,
    cfg: &MifConfig,
) -> Result<EstimationTrace> {
    check(model, data, theta0, cfg)?;
    let ivp_mask = model.ivp_mask();
    let lag = cfg.lag(data.len());
    let start = to_estimation(model, theta0)?;
    let mut theta = start.clone();
    let mut records = Vec::with_capacity(cfg.iterations);
    for m in 1..=cfg.iterations {
        let clock = Instant::now();
        let center = theta.clone();
        let out = perturbed_filter(
            model,
            &labelled(model, center.clone()),
            data,
            cfg.particles,
            &cfg.perturb,
            m,
            iteration_seed(cfg.seed, m),
        )
        .map_err(|e| filter_error(e, m))?;
        let score = estimate_score(&out, &center, &cfg.perturb, m, cfg.score_mode)?;
        let gamma = cfg.if1_steps.gamma(m, cfg.perturb.cooling)?;
        for (t, s) in theta.iter_mut().zip(&score) {
            *t += gamma * s;
        }
        set_ivps(&mut theta, &out, &ivp_mask, lag);
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                n: 0,
                what: "IF1 update".into(),
            }
            .at_iteration(m));
        }
        records.push(IterationRecord {
            m,
            theta: theta.clone(),
            theta_ag: theta.clone(),
            theta_md: center,
            score,
            loglik: out.loglik,
            wall_seconds: clock.elapsed().as_secs_f64(),
        });
    }
    Ok(EstimationTrace {
        method: "if1",
        theta0: start,
        records,
    })
}

/// Swarm-mean iterated filtering with a parameter swarm carried (and
/// re-perturbed) across iterations.
pub fn if2_run<M: PompModel + ?Sized>(
    model: &M,
    data: &TimeSeriesData,
    theta0: &ParameterVector,
    cfg: &MifConfig,
) -> Result<EstimationTrace> {
    check(model, data, theta0, cfg)?;
    let ivp_mask = model.ivp_mask();
    let lag = cfg.lag(data.len());
    let p = theta0.len();
    let j = cfg.particles;
    let start = to_estimation(model, theta0)?;
    let mut swarm = start.repeat(j);
    let mut theta = start.clone();
    let mut records = Vec::with_capacity(cfg.iterations);
    for m in 1..=cfg.iterations {
        let clock = Instant::now();
        let center = theta.clone();
        let out = swarm_filter(
            model,
            swarm,
            data,
            j,
            &cfg.perturb,
            m,
            iteration_seed(cfg.seed, m),
            FilterOptions::default(),
        )
        .map_err(|e| filter_error(e, m))?;
        let final_swarm = out.final_swarm.as_ref().expect("swarm filter keeps its swarm");
        swarm = final_swarm.iter().flatten().copied().collect();
        theta = (0..p)
            .map(|i| final_swarm.iter().map(|row| row[i]).sum::<f64>() / j as f64)
            .collect();
        set_ivps(&mut theta, &out, &ivp_mask, lag);
        records.push(IterationRecord {
            m,
            theta: theta.clone(),
            theta_ag: theta.clone(),
            theta_md: center,
            score: vec![0.0; p],
            loglik: out.loglik,
            wall_seconds: clock.elapsed().as_secs_f64(),
        });
    }
    Ok(EstimationTrace {
        method: "if2",
        theta0: start,
        records,
    })
}
