//! TOML run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::aig::SchedulePolicy;
use crate::data::{Covariates, TimeSeriesData};
use crate::error::{Error, Result};
use crate::estimators::{Evaluation, MifConfig, ScheduleSpec, ScoreCenter, StartBox, StepSequence};
use crate::model::PompModel;
use crate::models::linear_gaussian::{self, LinearGaussianModel};
use crate::models::malaria::{self, MalariaModel};
use crate::smc::{PerturbSpec, ScoreMode};

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub data: Option<DataConfig>,
    pub simulate: Option<SimulateConfig>,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default)]
    pub estimation: EstimationConfig,
    #[serde(default)]
    pub replication: ReplicationConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub benchmark: BenchmarkConfig,
    #[serde(default)]
    pub summarize: SummarizeConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: usize,
    pub out: Option<PathBuf>,
    /// Directory relative paths are resolved against; set by [`RunConfig::from_path`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_method() -> String {
    "aif".into()
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `linear_gaussian` or `malaria`.
    pub id: String,
    /// Natural-scale overrides of the model's default parameters, by name.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub population: Option<f64>,
    /// Malaria rainfall covariate CSV `(month, rainfall)`. Synthetic when absent.
    pub rainfall: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub n: usize,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EstimationConfig {
    pub particles: usize,
    pub iterations: usize,
    /// Random-walk sd per estimated parameter, by name.
    pub sigma: BTreeMap<String, f64>,
    pub cooling: Option<f64>,
    /// Alternative to `cooling`: the sd multiplier reached at the last iteration.
    pub final_sigma_ratio: Option<f64>,
    pub init_multiplier: f64,
    pub schedule: String,
    pub lipschitz: f64,
    pub delta: f64,
    pub if1_gamma1: Option<f64>,
    pub score_mode: String,
    pub score_center: ScoreCenter,
    pub ivp_lag: Option<usize>,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            particles: 1000,
            iterations: 25,
            sigma: BTreeMap::new(),
            cooling: None,
            final_sigma_ratio: None,
            init_multiplier: 5.0,
            schedule: "nonconvex".into(),
            lipschitz: 250.0,
            delta: 1.0,
            if1_gamma1: None,
            score_mode: "averaged".into(),
            score_center: ScoreCenter::Current,
            ivp_lag: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ReplicationConfig {
    pub count: usize,
    /// Natural-scale `[lower, upper]` per varied parameter; others start at the model parameters.
    pub start: BTreeMap<String, [f64; 2]>,
    /// Evaluation filter size; defaults to the estimation particle count.
    pub eval_particles: Option<usize>,
}

impl Default for ReplicationConfig {
    fn default() -> Self {
        Self {
            count: 1,
            start: BTreeMap::new(),
            eval_particles: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub particles: usize,
    pub repeats: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            particles: 1000,
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub particles: Vec<usize>,
    pub runs: usize,
    pub methods: Vec<String>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            particles: vec![100, 1000],
            runs: 5,
            methods: vec!["if1".into(), "if2".into(), "aif".into()],
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SummarizeConfig {
    pub inputs: Vec<PathBuf>,
    /// Log-unit distance from the reference counted as success.
    pub threshold: f64,
    /// Reference maximum; the toy model uses its Kalman maximum when absent.
    pub reference_loglik: Option<f64>,
}

impl Default for SummarizeConfig {
    fn default() -> Self {
        Self {
            inputs: Vec::new(),
            threshold: 3.0,
            reference_loglik: None,
        }
    }
}

/// A built-in model selected by a config.
#[derive(Debug, Clone)]
pub enum BuiltModel {
    LinearGaussian(LinearGaussianModel),
    Malaria(MalariaModel),
}

impl BuiltModel {
    pub fn as_model(&self) -> &dyn PompModel {
        match self {
            BuiltModel::LinearGaussian(m) => m,
            BuiltModel::Malaria(m) => m,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            BuiltModel::LinearGaussian(_) => "linear_gaussian",
            BuiltModel::Malaria(_) => "malaria",
        }
    }

    pub fn default_params(&self) -> Vec<f64> {
        match self {
            BuiltModel::LinearGaussian(_) => linear_gaussian::TRUE_PARAMS.to_vec(),
            BuiltModel::Malaria(_) => malaria::SYNTHETIC_PARAMS.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::parse(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(self.out.as_deref().unwrap_or(Path::new("out")))
    }

    pub fn build_model(&self) -> Result<BuiltModel> {
        match self.model.id.as_str() {
            "linear_gaussian" | "lg" | "toy" => Ok(BuiltModel::LinearGaussian(LinearGaussianModel)),
            "malaria" => {
                let rainfall = match &self.model.rainfall {
                    Some(p) => {
                        let p = self.resolve(p);
                        if !p.exists() {
                            return Err(Error::Config(format!("rainfall file {} does not exist", p.display())));
                        }
                        Covariates::from_path(&p)?
                    }
                    None => MalariaModel::synthetic_rainfall(self.horizon_hint()),
                };
                Ok(BuiltModel::Malaria(MalariaModel::new(
                    self.model.population.unwrap_or(400_000.0),
                    Some(rainfall),
                )))
            }
            other => Err(Error::Config(format!(
                "unknown model id '{other}' (expected linear_gaussian or malaria)"
            ))),
        }
    }

    fn horizon_hint(&self) -> usize {
        self.simulate.as_ref().map_or(240, |s| s.n).max(240) + 1
    }

    fn index_of(names: &[String], name: &str) -> Result<usize> {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("unknown parameter '{name}'")))
    }

    /// Model parameters after applying `[model.params]` overrides.
    pub fn params(&self, model: &BuiltModel) -> Result<Vec<f64>> {
        let names = model.as_model().param_names();
        let mut theta = model.default_params();
        for (k, v) in &self.model.params {
            theta[Self::index_of(&names, k)?] = *v;
        }
        Ok(theta)
    }

    pub fn simulation_seed(&self) -> u64 {
        self.simulate.as_ref().and_then(|s| s.seed).unwrap_or(self.seed)
    }

    /// The data set: read from `[data].path` when given, otherwise simulated.
    pub fn load_data(&self, model: &BuiltModel) -> Result<TimeSeriesData> {
        if let Some(d) = &self.data {
            let p = self.resolve(&d.path);
            if !p.exists() {
                return Err(Error::Config(format!("data file {} does not exist", p.display())));
            }
            return TimeSeriesData::from_path(&p);
        }
        let sim = self
            .simulate
            .as_ref()
            .ok_or_else(|| Error::Config("need a [data] path or a [simulate] section".into()))?;
        super::commands::simulate_dataset(model, &self.params(model)?, sim.n, self.simulation_seed())
            .map(|(d, _)| d)
    }

    pub fn mif_config(&self, model: &BuiltModel) -> Result<MifConfig> {
        let m = model.as_model();
        let names = m.param_names();
        let e = &self.estimation;
        let mut sigmas = vec![0.0; names.len()];
        for (k, v) in &e.sigma {
            sigmas[Self::index_of(&names, k)?] = *v;
        }
        let cooling = match (e.cooling, e.final_sigma_ratio) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either cooling or final_sigma_ratio, not both".into()))
            }
            (Some(c), None) => c,
            (None, Some(r)) if e.iterations > 1 => r.powf(1.0 / (e.iterations - 1) as f64),
            (None, _) => 1.0,
        };
        let policy: SchedulePolicy = e.schedule.parse()?;
        let score_mode: ScoreMode = e.score_mode.parse()?;
        Ok(MifConfig {
            particles: e.particles,
            iterations: e.iterations,
            perturb: PerturbSpec::new(sigmas, cooling, e.init_multiplier, m.ivp_mask())?,
            schedule: ScheduleSpec::Policy {
                policy,
                lipschitz: e.lipschitz,
                delta: e.delta,
            },
            if1_steps: StepSequence::Cooled {
                gamma1: e.if1_gamma1.unwrap_or(1.0 / (2.0 * e.lipschitz)),
            },
            score_mode,
            score_center: e.score_center,
            ivp_lag: e.ivp_lag,
            seed: self.seed,
        })
    }

    pub fn start_box(&self, model: &BuiltModel) -> Result<StartBox> {
        let names = model.as_model().param_names();
        let theta = self.params(model)?;
        let (mut lo, mut hi) = (theta.clone(), theta);
        for (k, [a, b]) in &self.replication.start {
            let i = Self::index_of(&names, k)?;
            lo[i] = *a;
            hi[i] = *b;
        }
        StartBox::new(lo, hi)
    }

    pub fn evaluation(&self) -> Evaluation {
        Evaluation::new(
            self.replication.eval_particles.unwrap_or(self.estimation.particles),
            self.seed,
        )
    }
}
