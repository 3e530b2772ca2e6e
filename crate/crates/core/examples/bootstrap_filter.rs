//! Bootstrap particle filter against the exact Kalman log-likelihood.

use aif::models::linear_gaussian::{toy_dataset, toy_loglik, LinearGaussianModel, TRUE_PARAMS};
use aif::rng::{derive_seed, tags};
use aif::smc::bootstrap_filter;
use aif::PompModel;

fn main() -> aif::Result<()> {
    let data = toy_dataset(42);
    let model = LinearGaussianModel;
    let theta = model.params(TRUE_PARAMS.to_vec())?;
    println!("Kalman loglik {:.3}", toy_loglik(&TRUE_PARAMS, &data)?);

    for j in [100, 1000, 10_000] {
        let mut lls = Vec::new();
        let mut min_ess = f64::INFINITY;
        for k in 0..10 {
            let out = bootstrap_filter(&model, &theta, &data, j, derive_seed(7, tags::EVALUATION, k))?;
            min_ess = out.ess_trace.iter().copied().fold(min_ess, f64::min);
            lls.push(out.loglik);
        }
        let mean = lls.iter().sum::<f64>() / lls.len() as f64;
        let sd = (lls.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
        println!("J={j:>6}  mean {mean:.3}  sd {sd:.3}  min ESS {min_ess:.1}");
    }
    Ok(())
}
