use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aif::harness::{self, Command, RunConfig};

#[derive(Parser)]
#[command(name = "aif", version, about = "Accelerated iterated filtering for POMP models")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores (overrides the config).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Simulate a data set and write it with a metadata sidecar.
    Simulate,
    /// Run bootstrap particle filters at the configured parameters.
    Filter,
    /// Run replicated AIF, IF1 or IF2 searches (or the Kalman MLE).
    Estimate,
    /// Time IF1, IF2 and AIF at several particle counts.
    Benchmark,
    /// Summarize result tables into quantiles and density data.
    Summarize,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Filter => Command::Filter,
            Cmd::Estimate => Command::Estimate,
            Cmd::Benchmark => Command::Benchmark,
            Cmd::Summarize => Command::Summarize,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(2);
    };
    let mut cfg = match RunConfig::from_path(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = cli.out {
        cfg.out = Some(std::env::current_dir().map(|d| d.join(&o)).unwrap_or(o));
    }
    match harness::run(cli.command.into(), &cfg) {
        Ok(report) => {
            print!("{report}");
            if report.success() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e @ aif::Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
