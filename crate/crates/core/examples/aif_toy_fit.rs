//! One accelerated iterated filtering run on the toy model.

use aif::aig::SchedulePolicy;
use aif::estimators::{aif_run, MifConfig, ScheduleSpec, ScoreCenter, StepSequence};
use aif::models::linear_gaussian::{kalman_mle, toy_dataset, toy_loglik, LinearGaussianModel, ESTIMATED, TRUE_PARAMS};
use aif::smc::{PerturbSpec, ScoreMode};
use aif::PompModel;

fn main() -> aif::Result<()> {
    let data = toy_dataset(42);
    let model = LinearGaussianModel;
    let iterations = 25;

    let mut sigmas = vec![0.0; 10];
    for &i in &ESTIMATED {
        sigmas[i] = 0.02;
    }
    let cfg = MifConfig {
        particles: 1000,
        iterations,
        // cool sigma from 0.02 to 0.011 over the run
        perturb: PerturbSpec::new(sigmas, 0.55f64.powf(1.0 / 24.0), 5.0, model.ivp_mask())?,
        schedule: ScheduleSpec::Policy {
            policy: SchedulePolicy::Nonconvex,
            lipschitz: 250.0,
            delta: 1.0,
        },
        if1_steps: StepSequence::Cooled { gamma1: 0.002 },
        score_mode: ScoreMode::Averaged,
        score_center: ScoreCenter::Current,
        ivp_lag: None,
        seed: 2,
    };

    let mut start = TRUE_PARAMS.to_vec();
    start[1] = 0.6;
    start[2] = -0.7;
    let trace = aif_run(&model, &data, &model.params(start)?, &cfg)?;
    for r in trace.records.iter().step_by(4) {
        println!(
            "m={:>2}  pf loglik {:9.2}  theta_ag ({:+.4}, {:+.4})",
            r.m, r.loglik, r.theta_ag[1], r.theta_ag[2]
        );
    }
    let est = trace.estimate();
    let mle = kalman_mle(&TRUE_PARAMS, &data, &ESTIMATED, -1.0, 1.0, 1e-6)?;
    println!(
        "estimate ({:+.4}, {:+.4}) exact loglik {:.3}; Kalman MLE ({:+.4}, {:+.4}) {:.3}",
        est[1],
        est[2],
        toy_loglik(est, &data)?,
        mle.theta[1],
        mle.theta[2],
        mle.loglik
    );
    trace.write_csv(std::fs::File::create(std::env::temp_dir().join("aif_toy_trace.csv"))?)
}
