//! Score estimate from one perturbed filter, compared with the
//! finite-difference gradient of the Kalman log-likelihood.

use aif::models::linear_gaussian::{kalman_fd_gradient, toy_dataset, LinearGaussianModel, ESTIMATED, FD_STEP, TRUE_PARAMS};
use aif::smc::{estimate_score, perturbed_filter, PerturbSpec, ScoreMode};
use aif::PompModel;

fn main() -> aif::Result<()> {
    let data = toy_dataset(42);
    let model = LinearGaussianModel;
    let mut theta = TRUE_PARAMS.to_vec();
    theta[1] = -0.3;
    theta[2] = 0.1;
    let g = kalman_fd_gradient(&theta, &data, &ESTIMATED, FD_STEP)?;
    println!("Kalman gradient  ({:9.2}, {:9.2})", g[0], g[1]);

    let center = model.params(theta.clone())?;
    for sigma in [0.04, 0.02, 0.01] {
        let mut sig = vec![0.0; theta.len()];
        for &i in &ESTIMATED {
            sig[i] = sigma;
        }
        let spec = PerturbSpec::new(sig, 1.0, 1.0, model.ivp_mask())?;
        let out = perturbed_filter(&model, &center, &data, 2000, &spec, 1, 11)?;
        let s = estimate_score(&out, &theta, &spec, 1, ScoreMode::Sum)?;
        let (a, b) = (s[ESTIMATED[0]], s[ESTIMATED[1]]);
        let cos = (a * g[0] + b * g[1]) / (a.hypot(b) * g[0].hypot(g[1]));
        println!("sigma {sigma:<5} score ({a:9.2}, {b:9.2})  cosine {cos:.3}");
    }
    Ok(())
}
