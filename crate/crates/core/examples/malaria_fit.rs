//! Simulate the malaria compartment model with rainfall forcing, then
//! recover the transmission spline and reporting parameters with AIF
//! from a displaced start.
//!
//! Takes about half a minute in release mode.

use aif::estimators::{Evaluation, Method};
use aif::harness::{BuiltModel, RunConfig};
use aif::models::malaria::{euler_maruyama_simulate, SYNTHETIC_PARAMS};
use aif::PompModel;

fn main() -> aif::Result<()> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let cfg = RunConfig::from_path(&dir.join("malaria.toml"))?;
    let built = cfg.build_model()?;
    let BuiltModel::Malaria(model) = &built else {
        unreachable!("malaria.toml selects the malaria model")
    };
    let path = euler_maruyama_simulate(model, &SYNTHETIC_PARAMS, 240, 2024)?;
    println!(
        "simulated 240 months, cases {:.0}..{:.0}, {} clamped of {} steps",
        path.observed.iter().copied().fold(f64::INFINITY, f64::min),
        path.observed.iter().copied().fold(0.0, f64::max),
        path.clamped_steps,
        path.total_steps
    );
    let data = path.dataset()?;

    let mif = cfg.mif_config(&built)?;
    let names = model.param_names();
    let tr = model.transform();
    let mut z = tr.forward_values(&SYNTHETIC_PARAMS, &names)?;
    for (k, i) in (0..z.len()).filter(|&i| mif.perturb.sigmas[i] > 0.0).enumerate() {
        z[i] += if k % 2 == 0 { 0.4 } else { -0.4 };
    }
    let start = tr.inverse_values(&z);

    let eval = Evaluation::new(1000, 9);
    println!("truth loglik {:.2}", eval.loglik(model, &data, &SYNTHETIC_PARAMS)?);
    println!("start loglik {:.2}", eval.loglik(model, &data, &start)?);
    let trace = Method::Aif.run(model, &data, &model.params(start)?, &mif)?;
    let fit = tr.inverse_values(trace.estimate());
    println!("fit   loglik {:.2} after {:.1}s", eval.loglik(model, &data, &fit)?, trace.total_seconds());
    for (i, name) in names.iter().enumerate().filter(|(i, _)| mif.perturb.sigmas[*i] > 0.0) {
        println!("  {name:<10} true {:>8.4}  fit {:>8.4}", SYNTHETIC_PARAMS[i], fit[i]);
    }
    Ok(())
}
