//! Inference drivers: accelerated iterated filtering (AIF), the IF1 and IF2
//! baselines, and multi-start replication with a common evaluation protocol.

pub mod config;
pub mod mif;
pub mod replicate;

pub use config::{MifConfig, ScheduleSpec, ScoreCenter, StepSequence};
pub use mif::{aif_run, if1_run, if2_run, iteration_seed, EstimationTrace, IterationRecord};
pub use replicate::{
    median, replicate_search, replication_seed, start_seed, with_workers, Evaluation,
    ExperimentResult, Method, ResultRow, StartBox, EVAL_FILTERS,
};
