//! The `aif` command-line workflow driven from code: simulate, estimate
//! with two methods, then summarize, all in a temporary directory.
//!
//! The same steps from a shell:
//!
//!     aif simulate  --config configs/toy_aif.toml
//!     aif estimate  --config configs/toy_aif.toml
//!     aif estimate  --config configs/toy_if1.toml
//!     aif summarize --config configs/toy_summary.toml

use aif::harness::{run, Command, RunConfig};

fn main() -> aif::Result<()> {
    let dir = std::env::temp_dir().join("aif_cli_workflow");
    std::fs::create_dir_all(&dir)?;
    let base = r#"
seed = 5
out = "out"
[model]
id = "linear_gaussian"
[simulate]
n = 100
seed = 42
[estimation]
particles = 500
iterations = 25
sigma = { alpha_2 = 0.02, alpha_3 = 0.02 }
final_sigma_ratio = 0.55
[replication]
count = 4
start = { alpha_2 = [-1.0, 1.0], alpha_3 = [-1.0, 1.0] }
[summarize]
inputs = ["out/results_aif.csv", "out/results_if1.csv"]
"#;
    let cfg = |method: &str| RunConfig::parse(&format!("method = \"{method}\"\n{base}"), &dir);

    for (cmd, method) in [
        (Command::Simulate, "aif"),
        (Command::Estimate, "aif"),
        (Command::Estimate, "if1"),
        (Command::Summarize, "aif"),
    ] {
        let report = run(cmd, &cfg(method)?)?;
        print!("{report}");
    }
    Ok(())
}
