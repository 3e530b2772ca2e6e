//! Score estimates from perturbed-parameter filter means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smc::filter::{FilterOutput, PerturbSpec};

/// How the filter-mean displacements are aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    /// `c^{-2(m-1)} Psi^{-1} sum_n (theta_bar_n - theta_ref)`.
    #[default]
    Sum,
    /// The sum scaled by `1 / ((N + 1) C^2)`.
    Averaged,
}

impl std::str::FromStr for ScoreMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(ScoreMode::Sum),
            "averaged" => Ok(ScoreMode::Averaged),
            other => Err(Error::InvalidArgument(format!("unknown score mode `{other}`"))),
        }
    }
}

/// Score vector from the filter means of a perturbed run at iteration `m`.
///
/// `Psi = diag(sigma_i^2)`. IVP coordinates and coordinates with
/// `sigma_i = 0` get a zero score.
pub fn estimate_score(
    out: &FilterOutput,
    theta_ref: &[f64],
    spec: &PerturbSpec,
    iteration: usize,
    mode: ScoreMode,
) -> Result<Vec<f64>> {
    let means = out.param_filter_means.as_ref().ok_or_else(|| {
        Error::InvalidArgument("score needs a perturbed filter run (no parameter means)".into())
    })?;
    let p = spec.len();
    if theta_ref.len() != p {
        return Err(Error::Dimension {
            what: "reference parameter".into(),
            expected: p,
            got: theta_ref.len(),
        });
    }
    let n_obs = means.len();
    let cool2 = spec.cooling_factor(iteration).powi(2);
    let extra = match mode {
        ScoreMode::Sum => 1.0,
        ScoreMode::Averaged => 1.0 / ((n_obs as f64 + 1.0) * spec.init_multiplier.powi(2)),
    };
    Ok((0..p)
        .map(|i| {
            let s = spec.sigmas[i];
            if spec.ivp_mask[i] || s == 0.0 {
                return 0.0;
            }
            let displacement: f64 = means.iter().map(|m| m[i] - theta_ref[i]).sum();
            extra * displacement / (cool2 * s * s)
        })
        .collect())
}
