//! The partially observed Markov process model interface.

use crate::data::TimeSeriesData;
use crate::error::{Error, Result};
use crate::params::{ParamTransform, ParameterVector};
use crate::rng::{particle_stream, RngStream, StreamRng};

/// A POMP model: initial-state simulator, transition simulator and
/// measurement density.
///
/// All callbacks receive parameters on the natural scale and must be pure
/// given their random stream; the filters call them concurrently.
pub trait PompModel: Sync {
    fn param_names(&self) -> Vec<String>;

    fn state_dim(&self) -> usize;

    fn obs_dim(&self) -> usize;

    /// Coordinates that only affect the initial state.
    fn ivp_mask(&self) -> Vec<bool> {
        vec![false; self.param_names().len()]
    }

    /// Natural-to-estimation scale transform.
    fn transform(&self) -> ParamTransform {
        ParamTransform::identity(self.param_names().len())
    }

    fn param_dim(&self) -> usize {
        self.param_names().len()
    }

    /// Draw `x_0` into `x`.
    fn init_state(&self, theta: &[f64], t0: f64, x: &mut [f64], rng: &mut StreamRng);

    /// Advance `x` in place from `t_prev` to `t_next`.
    fn step(
        &self,
        x: &mut [f64],
        theta: &[f64],
        t_prev: f64,
        t_next: f64,
        data: &TimeSeriesData,
        rng: &mut StreamRng,
    );

    /// `log f(y | x; theta)` at time `t`. Finite or `-inf`, never NaN, for finite inputs.
    fn meas_logpdf(&self, y: &[f64], x: &[f64], theta: &[f64], t: f64) -> f64;

    /// Wrap natural-scale values into a [`ParameterVector`] with this model's labels.
    fn params(&self, values: Vec<f64>) -> Result<ParameterVector> {
        ParameterVector::new(values, self.param_names(), self.ivp_mask())
    }
}

/// Outcome of [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub evaluations: usize,
    pub final_state: Vec<f64>,
    pub loglik_terms: Vec<f64>,
}

impl ValidationReport {
    pub fn render(&self) -> String {
        let mut s = format!("ok: {} evaluations\n", self.evaluations);
        for (n, v) in self.loglik_terms.iter().enumerate() {
            s.push_str(&format!("{} {:e}\n", n + 1, v));
        }
        s
    }
}

/// Simulate one trajectory at `theta` (natural scale) and evaluate the
/// measurement density at every observation.
pub fn validate_model<M: PompModel + ?Sized>(
    model: &M,
    theta: &ParameterVector,
    data: &TimeSeriesData,
    seed: u64,
) -> Result<ValidationReport> {
    check_dims(model, theta.len(), data)?;
    let mut x = vec![0.0; model.state_dim()];
    let mut rng = RngStream::new(seed, particle_stream(0, 0)).rng();
    model.init_state(&theta.values, data.t0, &mut x, &mut rng);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            n: 0,
            what: "initial state".into(),
        });
    }
    let mut terms = Vec::with_capacity(data.len());
    for n in 0..data.len() {
        let mut rng = RngStream::new(seed, particle_stream(n + 1, 0)).rng();
        model.step(&mut x, &theta.values, data.prev_time(n), data.times[n], data, &mut rng);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                n: n + 1,
                what: "simulated state".into(),
            });
        }
        let ll = model.meas_logpdf(&data.observations[n], &x, &theta.values, data.times[n]);
        if ll.is_nan() {
            return Err(Error::NonFinite {
                n: n + 1,
                what: "measurement log-density".into(),
            });
        }
        terms.push(ll);
    }
    Ok(ValidationReport {
        evaluations: terms.len(),
        final_state: x,
        loglik_terms: terms,
    })
}

pub(crate) fn check_dims<M: PompModel + ?Sized>(
    model: &M,
    p: usize,
    data: &TimeSeriesData,
) -> Result<()> {
    if p != model.param_dim() {
        return Err(Error::Dimension {
            what: "parameter vector".into(),
            expected: model.param_dim(),
            got: p,
        });
    }
    if !data.is_empty() && data.obs_dim() != model.obs_dim() {
        return Err(Error::Dimension {
            what: "observation width".into(),
            expected: model.obs_dim(),
            got: data.obs_dim(),
        });
    }
    Ok(())
}
