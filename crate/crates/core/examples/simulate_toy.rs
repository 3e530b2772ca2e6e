//! Simulate the bivariate linear-Gaussian toy model and print it as CSV.
//!
//! cargo run --example simulate_toy -- 42 20

use aif::models::linear_gaussian::{lg_simulate, LinearGaussianSpec, TRUE_PARAMS};

fn main() -> aif::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(42, |s| s.parse().expect("seed"));
    let n = args.next().map_or(100, |s| s.parse().expect("length"));
    let data = lg_simulate(&LinearGaussianSpec::from_toy_params(&TRUE_PARAMS), n, seed)?;
    data.write_csv(std::io::stdout().lock())
}
