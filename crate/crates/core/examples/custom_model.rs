//! Plugging a user model into the filters and estimators: a Gompertz
//! population model with log-normal process noise and log-normal counts.

use aif::estimators::{aif_run, MifConfig, ScheduleSpec, ScoreCenter, StepSequence};
use aif::aig::SchedulePolicy;
use aif::params::{ParamTransform, Transform};
use aif::rng::StreamRng;
use aif::smc::{bootstrap_filter, PerturbSpec, ScoreMode};
use aif::{validate_model, PompModel, TimeSeriesData};
use rand_distr::{Distribution, StandardNormal};

struct Gompertz;

// r, K, sigma, tau, X0
const TRUTH: [f64; 5] = [0.5, 1.0, 0.2, 0.1, 0.5];

impl PompModel for Gompertz {
    fn param_names(&self) -> Vec<String> {
        ["r", "K", "sigma", "tau", "X_0"].map(String::from).to_vec()
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn ivp_mask(&self) -> Vec<bool> {
        vec![false, false, false, false, true]
    }

    fn transform(&self) -> ParamTransform {
        ParamTransform::new(vec![Transform::Log; 5])
    }

    fn init_state(&self, theta: &[f64], _t0: f64, x: &mut [f64], _rng: &mut StreamRng) {
        x[0] = theta[4];
    }

    fn step(&self, x: &mut [f64], theta: &[f64], _t0: f64, _t1: f64, _d: &TimeSeriesData, rng: &mut StreamRng) {
        let (r, k, sigma) = (theta[0], theta[1], theta[2]);
        let e = (-r).exp();
        let z: f64 = StandardNormal.sample(rng);
        x[0] = k.powf(1.0 - e) * x[0].powf(e) * (sigma * z).exp();
    }

    fn meas_logpdf(&self, y: &[f64], x: &[f64], theta: &[f64], _t: f64) -> f64 {
        let tau = theta[3];
        let d = (y[0].ln() - x[0].ln()) / tau;
        -0.5 * d * d - tau.ln() - y[0].ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

fn simulate(n: usize, seed: u64) -> aif::Result<TimeSeriesData> {
    let mut rng = aif::rng::RngStream::new(seed, 0).rng();
    let mut x = [TRUTH[4]];
    let mut obs = Vec::new();
    // step() ignores the data argument for this model
    let dummy = TimeSeriesData::new(0.0, vec![1.0], vec![vec![1.0]])?;
    for _ in 0..n {
        Gompertz.step(&mut x, &TRUTH, 0.0, 1.0, &dummy, &mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        obs.push(vec![x[0] * (TRUTH[3] * z).exp()]);
    }
    TimeSeriesData::new(0.0, (1..=n).map(|t| t as f64).collect(), obs)
}

fn main() -> aif::Result<()> {
    let data = simulate(200, 3)?;
    let truth = Gompertz.params(TRUTH.to_vec())?;
    let report = validate_model(&Gompertz, &truth, &data, 1)?;
    println!("validate_model: {} measurement evaluations", report.evaluations);
    println!("loglik at truth {:.2}", bootstrap_filter(&Gompertz, &truth, &data, 2000, 1)?.loglik);

    // estimate r and K on the log scale
    let cfg = MifConfig {
        particles: 1000,
        iterations: 20,
        perturb: PerturbSpec::new(vec![0.05, 0.05, 0.0, 0.0, 0.0], 0.98, 3.0, Gompertz.ivp_mask())?,
        schedule: ScheduleSpec::Policy {
            policy: SchedulePolicy::Nonconvex,
            lipschitz: 50.0,
            delta: 1.0,
        },
        if1_steps: StepSequence::Cooled { gamma1: 0.01 },
        score_mode: ScoreMode::Averaged,
        score_center: ScoreCenter::Current,
        ivp_lag: None,
        seed: 8,
    };
    let start = Gompertz.params(vec![1.2, 2.5, 0.2, 0.1, 0.5])?;
    let trace = aif_run(&Gompertz, &data, &start, &cfg)?;
    let fit = Gompertz.transform().inverse_values(trace.estimate());
    println!("start r=1.2 K=2.5 -> fit r={:.3} K={:.3} (truth 0.5, 1.0)", fit[0], fit[1]);
    println!("loglik at fit {:.2}", bootstrap_filter(&Gompertz, &Gompertz.params(fit)?, &data, 2000, 1)?.loglik);
    Ok(())
}
