use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aig::schedule::AigSchedule;
use crate::csvio;
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const TRACE_SCHEMA: &str = "aif.aig-trace/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[default]
    Minimize,
    Maximize,
}

/// One completed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: usize,
    pub grad_norm: f64,
    pub objective: Option<f64>,
}

/// The three AIG sequences after `k` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AigState {
    pub theta: Vec<f64>,
    pub theta_ag: Vec<f64>,
    pub theta_md: Vec<f64>,
    pub k: usize,
    pub history: Vec<StepRecord>,
}

impl AigState {
    pub fn new(theta0: Vec<f64>) -> Self {
        Self {
            theta_ag: theta0.clone(),
            theta_md: theta0.clone(),
            theta: theta0,
            k: 0,
            history: Vec::new(),
        }
    }

    /// `theta^md_{k+1} = (1 - alpha_{k+1}) theta^ag_k + alpha_{k+1} theta_k`, the
    /// point where the next gradient must be evaluated.
    pub fn next_md(&self, s: &AigSchedule) -> Result<Vec<f64>> {
        let a = *s.alphas.get(self.k).ok_or_else(|| {
            Error::InvalidArgument(format!("schedule exhausted after {} steps", s.len()))
        })?;
        Ok(self
            .theta_ag
            .iter()
            .zip(&self.theta)
            .map(|(ag, th)| (1.0 - a) * ag + a * th)
            .collect())
    }
}

/// One AIG step with gradient `g` evaluated at `state.next_md(s)`:
/// `theta_k = theta_{k-1} - lambda_k g`, `theta^ag_k = theta^md_k - beta_k g`.
///
/// Returns the new state; the input is left untouched on error.
pub fn aig_step(state: &AigState, s: &AigSchedule, g: &[f64]) -> Result<AigState> {
    aig_step_with_objective(state, s, g, None)
}

pub fn aig_step_with_objective(
    state: &AigState,
    s: &AigSchedule,
    g: &[f64],
    objective: Option<f64>,
) -> Result<AigState> {
    let md = state.next_md(s)?;
    if g.len() != md.len() {
        return Err(Error::Dimension {
            what: "gradient".into(),
            expected: md.len(),
            got: g.len(),
        });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            n: state.k + 1,
            what: "gradient".into(),
        });
    }
    let (lambda, beta) = (s.lambdas[state.k], s.betas[state.k]);
    let theta = state.theta.iter().zip(g).map(|(t, gi)| t - lambda * gi).collect();
    let theta_ag = md.iter().zip(g).map(|(m, gi)| m - beta * gi).collect();
    let mut history = state.history.clone();
    history.push(StepRecord {
        k: state.k + 1,
        grad_norm: norm(g),
        objective,
    });
    Ok(AigState {
        theta,
        theta_ag,
        theta_md: md,
        k: state.k + 1,
        history,
    })
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A gradient (and optionally objective) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleValue {
    pub gradient: Vec<f64>,
    pub objective: Option<f64>,
}

impl OracleValue {
    pub fn gradient(gradient: Vec<f64>) -> Self {
        Self {
            gradient,
            objective: None,
        }
    }
}

/// One row of an AIG trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub theta: Vec<f64>,
    pub theta_ag: Vec<f64>,
    pub theta_md: Vec<f64>,
    pub grad_norm: f64,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AigRun {
    pub trace: Vec<TraceRow>,
    pub final_state: AigState,
    /// The `theta^md_k` with the smallest observed gradient norm.
    pub best: Vec<f64>,
    pub best_k: usize,
    /// Set when the run stopped early on the gradient tolerance.
    pub converged_at: Option<usize>,
}

impl AigRun {
    /// `(k, theta_1..p, theta_ag_1..p, grad_norm, objective)`; a missing
    /// objective is written as `NaN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema: {TRACE_SCHEMA}")?;
        let p = self.final_state.theta.len();
        let mut header = vec!["k".to_string()];
        header.extend((1..=p).map(|i| format!("theta_{i}")));
        header.extend((1..=p).map(|i| format!("theta_ag_{i}")));
        header.push("grad_norm".into());
        header.push("objective".into());
        let rows = self.trace.iter().map(|r| {
            let mut row = vec![r.k as f64];
            row.extend_from_slice(&r.theta);
            row.extend_from_slice(&r.theta_ag);
            row.push(r.grad_norm);
            row.push(r.objective.unwrap_or(f64::NAN));
            row
        });
        csvio::write_table(w, &header, rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    /// Stop once the gradient norm at `theta^md` falls below this.
    pub grad_tolerance: Option<f64>,
}

/// Run the schedule to completion against `oracle(theta_md, k)`.
///
/// AIG is a minimizer; with [`Sense::Maximize`] the oracle's gradient and
/// objective are negated before use and the recorded objective is reported
/// in the caller's sense.
pub fn aig_run<F>(mut oracle: F, theta0: &[f64], s: &AigSchedule, sense: Sense, opts: RunOptions) -> Result<AigRun>
where
    F: FnMut(&[f64], usize) -> Result<OracleValue>,
{
    let sign = match sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut state = AigState::new(theta0.to_vec());
    let mut trace = Vec::with_capacity(s.len());
    let mut best = theta0.to_vec();
    let mut best_norm = f64::INFINITY;
    let mut best_k = 0;
    let mut converged_at = None;
    for k in 1..=s.len() {
        let md = state.next_md(s)?;
        let value = oracle(&md, k).map_err(|e| e.at_iteration(k))?;
        let g: Vec<f64> = value.gradient.iter().map(|v| sign * v).collect();
        state = aig_step_with_objective(&state, s, &g, value.objective)
            .map_err(|e| e.at_iteration(k))?;
        let gn = norm(&g);
        if gn < best_norm {
            best_norm = gn;
            best = md.clone();
            best_k = k;
        }
        trace.push(TraceRow {
            k,
            theta: state.theta.clone(),
            theta_ag: state.theta_ag.clone(),
            theta_md: md,
            grad_norm: gn,
            objective: value.objective,
        });
        if opts.grad_tolerance.is_some_and(|tol| gn < tol) {
            converged_at = Some(k);
            break;
        }
    }
    Ok(AigRun {
        trace,
        final_state: state,
        best,
        best_k,
        converged_at,
    })
}

/// Gradient Lipschitz estimate: twice the largest difference quotient
/// `|g(x) - g(y)| / |x - y|` over `pairs` random point pairs in the box
/// `[lower, upper]`.
pub fn estimate_lipschitz<F>(
    mut grad: F,
    lower: &[f64],
    upper: &[f64],
    pairs: usize,
    seed: u64,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if lower.len() != upper.len() || lower.is_empty() {
        return Err(Error::InvalidArgument("box bounds must be non-empty and equal length".into()));
    }
    let mut rng = RngStream::new(seed, crate::rng::tags::LIPSCHITZ).rng();
    let draw = |rng: &mut crate::rng::StreamRng| -> Vec<f64> {
        lower
            .iter()
            .zip(upper)
            .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect()
    };
    let mut best: f64 = 0.0;
    for _ in 0..pairs {
        let x = draw(&mut rng);
        let y = draw(&mut rng);
        let dist: f64 = norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        if dist == 0.0 {
            continue;
        }
        let gx = grad(&x)?;
        let gy = grad(&y)?;
        let dg = norm(&gx.iter().zip(&gy).map(|(a, b)| a - b).collect::<Vec<_>>());
        best = best.max(dg / dist);
    }
    if !(best > 0.0) || !best.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "could not estimate a Lipschitz constant (got {best})"
        )));
    }
    Ok(2.0 * best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aig::schedule::AigSchedule;

    fn sched(lambda: f64, beta: f64) -> AigSchedule {
        AigSchedule::custom(vec![1.0, 0.5], vec![beta; 2], vec![lambda; 2], 1.0).unwrap()
    }

    #[test]
    fn first_md_is_theta0() {
        let mut st = AigState::new(vec![1.0, 2.0]);
        st.theta_ag = vec![100.0, -100.0];
        assert_eq!(st.next_md(&sched(0.5, 0.25)).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn worked_step() {
        let st = AigState::new(vec![0.0, 0.0]);
        let next = aig_step(&st, &sched(0.5, 0.25), &[1.0, -2.0]).unwrap();
        assert_eq!(next.theta, vec![-0.5, 1.0]);
        assert_eq!(next.theta_ag, vec![-0.25, 0.5]);
        assert_eq!(next.k, 1);
    }

    #[test]
    fn zero_gradient() {
        let s = sched(0.5, 0.25);
        let st = aig_step(&AigState::new(vec![0.0, 0.0]), &s, &[1.0, -2.0]).unwrap();
        let next = aig_step(&st, &s, &[0.0, 0.0]).unwrap();
        assert_eq!(next.theta, st.theta);
        assert_eq!(next.theta_ag, next.theta_md);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let st = AigState::new(vec![0.0]);
        let s = AigSchedule::nonconvex(3, 1.0).unwrap();
        assert!(aig_step(&st, &s, &[f64::NAN]).is_err());
        assert_eq!(st.k, 0);
    }

    #[test]
    fn maximize_negates() {
        // maximize -(x-3)^2: gradient -2(x-3)
        let s = AigSchedule::nonconvex(200, 2.0).unwrap();
        let run = aig_run(
            |x, _| Ok(OracleValue::gradient(vec![-2.0 * (x[0] - 3.0)])),
            &[0.0],
            &s,
            Sense::Maximize,
            RunOptions::default(),
        )
        .unwrap();
        assert!((run.final_state.theta_ag[0] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn oracle_error_carries_iteration() {
        let s = AigSchedule::nonconvex(5, 1.0).unwrap();
        let err = aig_run(
            |_, k| {
                if k == 3 {
                    Err(Error::Degeneracy { n: 7 })
                } else {
                    Ok(OracleValue::gradient(vec![1.0]))
                }
            },
            &[0.0],
            &s,
            Sense::Minimize,
            RunOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Iteration { iteration: 3, .. }));
    }

    #[test]
    fn lipschitz_of_quadratic() {
        // grad of 0.5 * 3 |x|^2 is 3x, so every quotient is exactly 3
        let l = estimate_lipschitz(|x| Ok(x.iter().map(|v| 3.0 * v).collect()), &[-1.0, -1.0], &[1.0, 1.0], 20, 1)
            .unwrap();
        assert!((l - 6.0).abs() < 1e-12);
    }
}
