//! Configuration-driven front end: simulate, filter, estimate, benchmark and
//! summarize. Every CSV written here starts with a `# schema:` comment line.

pub mod commands;
pub mod config;

pub use commands::{
    benchmark, cmd_benchmark, cmd_estimate, cmd_filter, cmd_simulate, cmd_summarize, quantile, run,
    simulate_dataset, summarize, toy_mle, BenchmarkRow, Command, Report, SummaryRow,
};
pub use config::{BuiltModel, RunConfig};
