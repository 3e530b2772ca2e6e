use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::csvio;
use crate::data::TimeSeriesData;
use crate::error::{Error, Result};
use crate::estimators::config::MifConfig;
use crate::estimators::mif::{aif_run, if1_run, if2_run, EstimationTrace};
use crate::model::PompModel;
use crate::params::ParameterVector;
use crate::rng::{derive_seed, tags, RngStream};
use crate::smc::bootstrap_filter;

pub const RESULT_SCHEMA: &str = "aif.experiment/1";

/// Number of bootstrap filters averaged (by median) into each final loglik.
pub const EVAL_FILTERS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Aif,
    If1,
    If2,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Aif => "aif",
            Method::If1 => "if1",
            Method::If2 => "if2",
        }
    }

    pub fn run<M: PompModel + ?Sized>(
        self,
        model: &M,
        data: &TimeSeriesData,
        theta0: &ParameterVector,
        cfg: &MifConfig,
    ) -> Result<EstimationTrace> {
        match self {
            Method::Aif => aif_run(model, data, theta0, cfg),
            Method::If1 => if1_run(model, data, theta0, cfg),
            Method::If2 => if2_run(model, data, theta0, cfg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "aif" => Ok(Method::Aif),
            "if1" => Ok(Method::If1),
            "if2" => Ok(Method::If2),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}' (expected aif, if1 or if2)"
            ))),
        }
    }
}

/// Natural-scale box that starting points are drawn from uniformly.
/// Coordinates with `lower == upper` are held at that value.
#[derive(Debug, Clone, PartialEq)]
pub struct StartBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StartBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension {
                what: "start box upper bounds".into(),
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::Config(format!(
                    "start box coordinate {i} has bad bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(StartBox { lower, upper })
    }

    /// Box around `base` that varies only the listed coordinates.
    pub fn around(base: &[f64], coords: &[usize], lower: f64, upper: f64) -> Result<Self> {
        let mut lo = base.to_vec();
        let mut hi = base.to_vec();
        for &i in coords {
            lo[i] = lower;
            hi[i] = upper;
        }
        StartBox::new(lo, hi)
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn draw(&self, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, 0).rng();
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| if lo == hi { lo } else { rng.random_range(lo..hi) })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub rep: usize,
    pub seed: u64,
    pub start: Vec<f64>,
    /// Natural scale; NaN when the run failed.
    pub final_theta: Vec<f64>,
    pub loglik: f64,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub traces: Vec<Option<EstimationTrace>>,
}

impl ExperimentResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }

    pub fn logliks(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.ok()).map(|r| r.loglik).collect()
    }

    /// `method,rep,seed,start_1..p,final_1..p,loglik,wall_seconds,status`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let p = self.rows.first().map_or(0, |r| r.start.len());
        let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
        out.write_record([format!("# schema: {RESULT_SCHEMA}")])?;
        let mut header = vec!["method".to_string(), "rep".into(), "seed".into()];
        header.extend((1..=p).map(|i| format!("start_{i}")));
        header.extend((1..=p).map(|i| format!("final_{i}")));
        header.extend(["loglik".into(), "wall_seconds".into(), "status".into()]);
        out.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.method.clone(), r.rep.to_string(), r.seed.to_string()];
            rec.extend(r.start.iter().map(|v| csvio::fmt_f64(*v)));
            rec.extend(r.final_theta.iter().map(|v| csvio::fmt_f64(*v)));
            rec.push(csvio::fmt_f64(r.loglik));
            rec.push(csvio::fmt_f64(r.wall_seconds));
            rec.push(r.error.clone().unwrap_or_else(|| "ok".into()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a table written by [`ExperimentResult::write_csv`]. Traces are not restored.
    pub fn read_csv<R: Read>(reader: R, source: &str) -> Result<Self> {
        let schema_err = |detail: String| Error::Schema {
            file: source.to_string(),
            detail,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let first = records
            .next()
            .ok_or_else(|| schema_err("empty file".into()))??;
        let tag = first.get(0).unwrap_or("");
        if tag.trim() != format!("# schema: {RESULT_SCHEMA}") {
            return Err(schema_err(format!("expected schema line '# schema: {RESULT_SCHEMA}', found '{tag}'")));
        }
        let header = records
            .next()
            .ok_or_else(|| schema_err("missing header".into()))??;
        let header: Vec<String> = header.iter().map(str::to_string).collect();
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| schema_err(format!("missing column '{name}'")))
        };
        let (i_method, i_rep, i_seed, i_ll, i_wall, i_status) = (
            find("method")?,
            find("rep")?,
            find("seed")?,
            find("loglik")?,
            find("wall_seconds")?,
            find("status")?,
        );
        let starts: Vec<usize> = (1..)
            .map_while(|i| header.iter().position(|h| *h == format!("start_{i}")))
            .collect();
        let finals: Vec<usize> = (1..=starts.len())
            .map(|i| find(&format!("final_{i}")))
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for (line, rec) in records.enumerate() {
            let rec = rec?;
            let field = |i: usize, name: &str| {
                rec.get(i)
                    .ok_or_else(|| schema_err(format!("row {}: missing column '{name}'", line + 1)))
            };
            let num = |i: usize, name: &str| -> Result<f64> {
                let s = field(i, name)?;
                s.trim().parse::<f64>().map_err(|_| {
                    schema_err(format!("row {}: column '{name}' is not a number: '{s}'", line + 1))
                })
            };
            let rep = field(i_rep, "rep")?
                .parse()
                .map_err(|_| schema_err(format!("row {}: column 'rep' is not an integer", line + 1)))?;
            let seed = field(i_seed, "seed")?
                .parse()
                .map_err(|_| schema_err(format!("row {}: column 'seed' is not an integer", line + 1)))?;
            let status = field(i_status, "status")?.to_string();
            rows.push(ResultRow {
                method: field(i_method, "method")?.to_string(),
                rep,
                seed,
                start: starts
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| num(i, &format!("start_{}", k + 1)))
                    .collect::<Result<_>>()?,
                final_theta: finals
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| num(i, &format!("final_{}", k + 1)))
                    .collect::<Result<_>>()?,
                loglik: num(i_ll, "loglik")?,
                wall_seconds: num(i_wall, "wall_seconds")?,
                error: (status != "ok").then_some(status),
            });
        }
        Ok(ExperimentResult {
            rows,
            traces: Vec::new(),
        })
    }
}

/// Evaluation protocol shared by every method in a comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub particles: usize,
    pub filters: usize,
    pub master_seed: u64,
}

impl Evaluation {
    pub fn new(particles: usize, master_seed: u64) -> Self {
        Evaluation {
            particles,
            filters: EVAL_FILTERS,
            master_seed,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.filters)
            .map(|k| derive_seed(self.master_seed, tags::EVALUATION, k as u64))
            .collect()
    }

    /// Median loglik of the evaluation filters at natural-scale `theta`.
    pub fn loglik<M: PompModel + ?Sized>(
        &self,
        model: &M,
        data: &TimeSeriesData,
        theta: &[f64],
    ) -> Result<f64> {
        let pv = model.params(theta.to_vec())?;
        let mut lls = self
            .seeds()
            .into_iter()
            .map(|s| bootstrap_filter(model, &pv, data, self.particles, s).map(|o| o.loglik))
            .collect::<Result<Vec<_>>>()?;
        Ok(median(&mut lls))
    }
}

pub fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Seed of replication `rep` under `master_seed`; shared across methods.
pub fn replication_seed(master_seed: u64, rep: usize) -> u64 {
    derive_seed(master_seed, tags::REPLICATION, rep as u64)
}

pub fn start_seed(master_seed: u64, rep: usize) -> u64 {
    derive_seed(master_seed, tags::START, rep as u64)
}

/// `R` runs of `method` from uniform starts in `start_box`, evaluated with
/// `eval`. Failed runs become rows carrying their error. Rows come back in
/// replication order whatever the thread count of the calling pool.
#[allow(clippy::too_many_arguments)]
pub fn replicate_search<M: PompModel + ?Sized>(
    method: Method,
    model: &M,
    data: &TimeSeriesData,
    start_box: &StartBox,
    replications: usize,
    cfg: &MifConfig,
    master_seed: u64,
    eval: &Evaluation,
) -> Result<ExperimentResult> {
    if replications == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    if start_box.len() != model.param_dim() {
        return Err(Error::Dimension {
            what: "start box".into(),
            expected: model.param_dim(),
            got: start_box.len(),
        });
    }
    cfg.validate(data.len())?;
    let outcomes: Vec<(ResultRow, Option<EstimationTrace>)> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(master_seed, rep);
            let start = start_box.draw(start_seed(master_seed, rep));
            let mut row = ResultRow {
                method: method.tag().into(),
                rep,
                seed,
                start: start.clone(),
                final_theta: vec![f64::NAN; start.len()],
                loglik: f64::NAN,
                wall_seconds: f64::NAN,
                error: None,
            };
            let run_cfg = MifConfig {
                seed,
                ..cfg.clone()
            };
            let clock = Instant::now();
            let attempt = model
                .params(start)
                .and_then(|theta0| method.run(model, data, &theta0, &run_cfg));
            row.wall_seconds = clock.elapsed().as_secs_f64();
            match attempt {
                Ok(trace) => {
                    let fin = model.transform().inverse_values(trace.estimate());
                    match eval.loglik(model, data, &fin) {
                        Ok(ll) => row.loglik = ll,
                        Err(e) => row.error = Some(format!("evaluation: {e}")),
                    }
                    row.final_theta = fin;
                    (row, Some(trace))
                }
                Err(e) => {
                    row.error = Some(e.to_string());
                    (row, None)
                }
            }
        })
        .collect();
    let (rows, traces) = outcomes.into_iter().unzip();
    Ok(ExperimentResult { rows, traces })
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = rayon default).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}
