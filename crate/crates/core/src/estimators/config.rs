use serde::{Deserialize, Serialize};

use crate::aig::{AigSchedule, SchedulePolicy};
use crate::error::{Error, Result};
use crate::smc::{PerturbSpec, ScoreMode};

/// Which point the filter-mean displacements are measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScoreCenter {
    /// `theta^md_m`, the point the perturbed filter is centred on.
    #[default]
    Current,
    /// `theta^md_{m-1}` (`theta_0` at `m = 1`).
    Previous,
}

/// How the AIG step sequences are produced for an AIF run of `M` iterations.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Policy {
        policy: SchedulePolicy,
        lipschitz: f64,
        delta: f64,
    },
    Explicit(AigSchedule),
}

impl ScheduleSpec {
    pub fn build(&self, iterations: usize) -> Result<AigSchedule> {
        match self {
            ScheduleSpec::Policy {
                policy,
                lipschitz,
                delta,
            } => match policy {
                SchedulePolicy::Nonconvex => AigSchedule::nonconvex_with_delta(iterations, *lipschitz, *delta),
                SchedulePolicy::Convex => AigSchedule::convex(iterations, *lipschitz, *delta),
                SchedulePolicy::Custom => Err(Error::Config(
                    "a custom schedule must be given explicitly".into(),
                )),
            },
            ScheduleSpec::Explicit(s) => {
                if s.len() < iterations {
                    return Err(Error::Config(format!(
                        "explicit schedule has {} steps, need {iterations}",
                        s.len()
                    )));
                }
                Ok(s.clone())
            }
        }
    }
}

/// IF1 step sizes `gamma_m`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSequence {
    /// `gamma_m = gamma_1 c^{2(m-1)}`.
    Cooled { gamma1: f64 },
    Explicit(Vec<f64>),
}

impl StepSequence {
    pub fn gamma(&self, m: usize, cooling: f64) -> Result<f64> {
        match self {
            StepSequence::Cooled { gamma1 } => Ok(gamma1 * cooling.powi(2 * (m as i32 - 1))),
            StepSequence::Explicit(v) => v.get(m - 1).copied().ok_or_else(|| {
                Error::Config(format!("explicit IF1 step sequence has no entry for iteration {m}"))
            }),
        }
    }
}

/// Settings shared by the AIF, IF1 and IF2 drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct MifConfig {
    pub particles: usize,
    pub iterations: usize,
    pub perturb: PerturbSpec,
    pub schedule: ScheduleSpec,
    pub if1_steps: StepSequence,
    pub score_mode: ScoreMode,
    pub score_center: ScoreCenter,
    /// 1-based time whose filter mean updates the IVPs; `None` means the last time.
    pub ivp_lag: Option<usize>,
    pub seed: u64,
}

impl MifConfig {
    pub fn validate(&self, n_obs: usize) -> Result<()> {
        if self.particles < 2 {
            return Err(Error::Config(format!("need J >= 2 particles, got {}", self.particles)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("need M >= 1 iterations".into()));
        }
        if n_obs == 0 {
            return Err(Error::Config("data set is empty".into()));
        }
        if let Some(l) = self.ivp_lag {
            if l == 0 || l > n_obs {
                return Err(Error::Config(format!("IVP lag {l} outside [1, {n_obs}]")));
            }
        }
        Ok(())
    }

    pub fn lag(&self, n_obs: usize) -> usize {
        self.ivp_lag.unwrap_or(n_obs)
    }
}
