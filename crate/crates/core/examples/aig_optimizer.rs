//! The accelerated gradient iteration on its own, with exact gradients.

use aif::aig::{aig_run, AigSchedule, OracleValue, RunOptions, Sense};

fn rosenbrock_grad(x: &[f64]) -> Vec<f64> {
    vec![
        -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
        200.0 * (x[1] - x[0] * x[0]),
    ]
}

fn main() -> aif::Result<()> {
    // nonconvex policy: the smallest gradient seen shrinks like 1/N
    for n in [1000, 4000, 16_000] {
        let s = AigSchedule::nonconvex(n, 1500.0)?;
        let run = aig_run(
            |x, _| Ok(OracleValue::gradient(rosenbrock_grad(x))),
            &[-1.2, 1.0],
            &s,
            Sense::Minimize,
            RunOptions::default(),
        )?;
        let min_g = run.trace.iter().map(|r| r.grad_norm).fold(f64::INFINITY, f64::min);
        println!("rosenbrock N={n:>5}  min |grad| {min_g:.3e}  best {:?}", run.best);
    }

    // convex policy on a quadratic
    let a = [1.0, 0.1, 0.01];
    for n in [25, 50, 100, 200] {
        let s = AigSchedule::convex(n, 1.0, 1.0)?;
        let run = aig_run(
            |x, _| Ok(OracleValue::gradient(x.iter().zip(&a).map(|(x, a)| a * x).collect())),
            &[1.0, 1.0, 1.0],
            &s,
            Sense::Minimize,
            RunOptions::default(),
        )?;
        let x = &run.final_state.theta_ag;
        let gap: f64 = 0.5 * x.iter().zip(&a).map(|(x, a)| a * x * x).sum::<f64>();
        println!("quadratic N={n:>3}  gap {gap:.3e}");
    }
    Ok(())
}
