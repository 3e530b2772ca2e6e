//! Accelerated inexact gradient (AIG) optimization.
//!
//! Three sequences are advanced per step: the main iterate `theta`, the
//! aggregated iterate `theta_ag`, and the interpolated point `theta_md` where
//! the (possibly biased) gradient is evaluated.

pub mod optimizer;
pub mod schedule;

pub use optimizer::{
    aig_run, aig_step, aig_step_with_objective, estimate_lipschitz, norm, AigRun, AigState,
    OracleValue, RunOptions, Sense, StepRecord, TraceRow,
};
pub use schedule::{ck_coefficients, AigSchedule, CkReport, SchedulePolicy};
