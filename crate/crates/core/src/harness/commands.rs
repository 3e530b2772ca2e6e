//! The five harness commands. Each writes its outputs under the config's
//! output directory and returns a [`Report`].

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::csvio;
use crate::data::TimeSeriesData;
use crate::error::{Error, Result};
use crate::estimators::{replicate_search, replication_seed, with_workers, ExperimentResult, Method};
use crate::harness::config::{BuiltModel, RunConfig};
use crate::models::linear_gaussian::{self, kalman_mle, lg_simulate, toy_loglik, KalmanMle, LinearGaussianSpec};
use crate::models::malaria::euler_maruyama_simulate;
use crate::rng::{derive_seed, tags};
use crate::smc::bootstrap_filter;

pub const META_SCHEMA: &str = "aif.dataset-meta/1";
pub const FILTER_LOGLIK_SCHEMA: &str = "aif.filter-logliks/1";
pub const KALMAN_SCHEMA: &str = "aif.kalman-mle/1";
pub const BENCHMARK_SCHEMA: &str = "aif.benchmark/1";
pub const SUMMARY_SCHEMA: &str = "aif.summary/1";
pub const DENSITY_SCHEMA: &str = "aif.density/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Filter,
    Estimate,
    Benchmark,
    Summarize,
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => Command::Simulate,
            "filter" => Command::Filter,
            "estimate" => Command::Estimate,
            "benchmark" => Command::Benchmark,
            "summarize" => Command::Summarize,
            other => return Err(Error::Config(format!("unknown command '{other}'"))),
        })
    }
}

/// Files written and the number of failed units of work.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub failures: usize,
    pub notes: Vec<String>,
}

impl Report {
    pub fn success(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.notes {
            writeln!(f, "{n}")?;
        }
        for p in &self.files {
            writeln!(f, "wrote {}", p.display())?;
        }
        if self.failures > 0 {
            writeln!(f, "{} failure(s)", self.failures)?;
        }
        Ok(())
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Report> {
    with_workers(cfg.workers, || match cmd {
        Command::Simulate => cmd_simulate(cfg),
        Command::Filter => cmd_filter(cfg),
        Command::Estimate => cmd_estimate(cfg),
        Command::Benchmark => cmd_benchmark(cfg),
        Command::Summarize => cmd_summarize(cfg),
    })?
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    }
    let f = File::create(path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

/// Simulate `n` observations of the built model at `theta`; the second value
/// is a clamping warning, if any.
pub fn simulate_dataset(
    model: &BuiltModel,
    theta: &[f64],
    n: usize,
    seed: u64,
) -> Result<(TimeSeriesData, Option<String>)> {
    match model {
        BuiltModel::LinearGaussian(_) => Ok((
            lg_simulate(&LinearGaussianSpec::from_toy_params(theta), n, seed)?,
            None,
        )),
        BuiltModel::Malaria(m) => {
            let path = euler_maruyama_simulate(m, theta, n, seed)?;
            let data = path.dataset()?;
            let data = match &m.rainfall {
                Some(r) => data.with_covariates(r.clone()),
                None => data,
            };
            Ok((data, path.warning))
        }
    }
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Report> {
    let model = cfg.build_model()?;
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| Error::Config("simulate needs a [simulate] section".into()))?;
    let theta = cfg.params(&model)?;
    let seed = cfg.simulation_seed();
    let (data, warning) = simulate_dataset(&model, &theta, sim.n, seed)?;
    let out = cfg.out_dir();
    let mut report = Report::default();

    let data_path = out.join("data.csv");
    let mut w = create(&data_path)?;
    data.write_csv(&mut w)?;
    w.flush()?;
    report.files.push(data_path);

    if let (BuiltModel::Malaria(_), Some(cov)) = (&model, &data.covariates) {
        let p = out.join("rainfall.csv");
        let mut w = create(&p)?;
        cov.write_csv(&mut w, "month")?;
        w.flush()?;
        report.files.push(p);
    }

    let meta_path = out.join("data.meta.toml");
    let mut meta = String::new();
    meta.push_str(&format!("schema = \"{META_SCHEMA}\"\n"));
    meta.push_str(&format!("model = \"{}\"\n", model.id()));
    meta.push_str(&format!("seed = {seed}\n"));
    meta.push_str(&format!("n = {}\n", sim.n));
    if let Some(w) = &warning {
        meta.push_str(&format!("warning = {:?}\n", w));
        report.notes.push(format!("warning: {w}"));
    }
    meta.push_str("\n[params]\n");
    for (name, v) in model.as_model().param_names().iter().zip(&theta) {
        meta.push_str(&format!("{name} = {}\n", toml_float(*v)));
    }
    let mut w = create(&meta_path)?;
    w.write_all(meta.as_bytes())?;
    w.flush()?;
    report.files.push(meta_path);
    Ok(report)
}

fn toml_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

pub fn cmd_filter(cfg: &RunConfig) -> Result<Report> {
    let model = cfg.build_model()?;
    let data = cfg.load_data(&model)?;
    let theta = cfg.params(&model)?;
    let m = model.as_model();
    let pv = m.params(theta.clone())?;
    let kalman = match model {
        BuiltModel::LinearGaussian(_) => toy_loglik(&theta, &data).ok(),
        BuiltModel::Malaria(_) => None,
    };
    let out = cfg.out_dir();
    let mut report = Report::default();
    let mut rows = Vec::new();
    for r in 0..cfg.filter.repeats.max(1) {
        let seed = derive_seed(cfg.seed, tags::EVALUATION, r as u64);
        match bootstrap_filter(m, &pv, &data, cfg.filter.particles, seed) {
            Ok(o) => {
                if r == 0 {
                    let p = out.join("filter.csv");
                    let mut w = create(&p)?;
                    o.write_csv(&mut w)?;
                    w.flush()?;
                    report.files.push(p);
                }
                let min_ess = o.ess_trace.iter().copied().fold(f64::INFINITY, f64::min);
                rows.push((seed, o.loglik, min_ess));
            }
            Err(e) => {
                report.failures += 1;
                report.notes.push(format!("repeat {r}: {e}"));
                rows.push((seed, f64::NAN, f64::NAN));
            }
        }
    }
    let p = out.join("filter_logliks.csv");
    let mut w = create(&p)?;
    writeln!(w, "# schema: {FILTER_LOGLIK_SCHEMA}")?;
    let header: Vec<String> = ["rep", "seed", "loglik", "min_ess", "kalman_loglik"].map(String::from).to_vec();
    let mut cw = csv::Writer::from_writer(&mut w);
    cw.write_record(&header)?;
    for (r, (seed, ll, ess)) in rows.iter().enumerate() {
        cw.write_record([
            r.to_string(),
            seed.to_string(),
            csvio::fmt_f64(*ll),
            csvio::fmt_f64(*ess),
            csvio::fmt_f64(kalman.unwrap_or(f64::NAN)),
        ])?;
    }
    cw.flush()?;
    drop(cw);
    w.flush()?;
    report.files.push(p);
    Ok(report)
}

/// Coordinates estimated by the config (nonzero random-walk sd).
fn estimated_coords(cfg: &RunConfig, model: &BuiltModel) -> Result<Vec<usize>> {
    let mif = cfg.mif_config(model)?;
    Ok((0..mif.perturb.sigmas.len())
        .filter(|&i| mif.perturb.sigmas[i] > 0.0)
        .collect())
}

/// Kalman MLE of the toy model for the config's estimated coordinates.
pub fn toy_mle(cfg: &RunConfig, model: &BuiltModel, data: &TimeSeriesData) -> Result<KalmanMle> {
    if !matches!(model, BuiltModel::LinearGaussian(_)) {
        return Err(Error::Config("the kalman method needs the linear_gaussian model".into()));
    }
    let mut coords = estimated_coords(cfg, model)?;
    if coords.is_empty() {
        coords = linear_gaussian::ESTIMATED.to_vec();
    }
    let b = cfg.start_box(model)?;
    let (lo, hi) = coords.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
        (lo.min(b.lower[i]), hi.max(b.upper[i]))
    });
    let (lo, hi) = if lo < hi { (lo, hi) } else { (-1.0, 1.0) };
    kalman_mle(&cfg.params(model)?, data, &coords, lo, hi, 1e-6)
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<Report> {
    match cfg.method.as_str() {
        "pf-only" => return cmd_filter(cfg),
        "kalman" => return estimate_kalman(cfg),
        _ => {}
    }
    let method: Method = cfg
        .method
        .parse()
        .map_err(|_| Error::Config(format!("unknown method '{}' (expected aif, if1, if2, pf-only or kalman)", cfg.method)))?;
    let model = cfg.build_model()?;
    let data = cfg.load_data(&model)?;
    let result = replicate_search(
        method,
        model.as_model(),
        &data,
        &cfg.start_box(&model)?,
        cfg.replication.count,
        &cfg.mif_config(&model)?,
        cfg.seed,
        &cfg.evaluation(),
    )?;
    let out = cfg.out_dir();
    let mut report = Report::default();
    let p = out.join(format!("results_{}.csv", method.tag()));
    let mut w = create(&p)?;
    result.write_csv(&mut w)?;
    w.flush()?;
    report.files.push(p);
    for (row, trace) in result.rows.iter().zip(&result.traces) {
        if let Some(t) = trace {
            let p = out.join("traces").join(format!("{}_rep{:03}.csv", method.tag(), row.rep));
            let mut w = create(&p)?;
            t.write_csv(&mut w)?;
            w.flush()?;
        }
        if let Some(e) = &row.error {
            report.notes.push(format!("rep {}: {e}", row.rep));
        }
    }
    report.failures = result.failures();
    report.notes.push(format!(
        "{} of {} replications completed; traces in {}",
        result.rows.len() - report.failures,
        result.rows.len(),
        out.join("traces").display()
    ));
    Ok(report)
}

fn estimate_kalman(cfg: &RunConfig) -> Result<Report> {
    let model = cfg.build_model()?;
    let data = cfg.load_data(&model)?;
    let mle = toy_mle(cfg, &model, &data)?;
    let names = model.as_model().param_names();
    let p = cfg.out_dir().join("kalman.csv");
    let mut w = create(&p)?;
    writeln!(w, "# schema: {KALMAN_SCHEMA}")?;
    let mut header = names.clone();
    header.extend(["loglik".to_string(), "grad_norm".to_string()]);
    let mut row = mle.theta.clone();
    row.extend([mle.loglik, mle.grad_norm]);
    csvio::write_table(&mut w, &header, [row])?;
    w.flush()?;
    Ok(Report {
        files: vec![p],
        failures: 0,
        notes: vec![format!("Kalman maximum loglik {:.4}", mle.loglik)],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub method: String,
    pub particles: usize,
    pub runs: usize,
    pub mean_seconds: f64,
    pub sd_seconds: f64,
    pub ratio_to_if2: f64,
}

/// Mean estimation-loop wall time per method and particle count. Runs are
/// sequential so that they do not compete for the worker pool.
pub fn benchmark(cfg: &RunConfig) -> Result<(Vec<BenchmarkRow>, usize)> {
    let model = cfg.build_model()?;
    let data = cfg.load_data(&model)?;
    let methods: Vec<Method> = cfg
        .benchmark
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<Result<_>>()?;
    let start_box = cfg.start_box(&model)?;
    let base = cfg.mif_config(&model)?;
    let m = model.as_model();
    let runs = cfg.benchmark.runs.max(1);
    let mut rows = Vec::new();
    let mut failures = 0;
    for &j in &cfg.benchmark.particles {
        let mut block = Vec::new();
        for &method in &methods {
            let mut times = Vec::with_capacity(runs);
            for r in 0..runs {
                let run_cfg = crate::estimators::MifConfig {
                    particles: j,
                    seed: replication_seed(cfg.seed, r),
                    ..base.clone()
                };
                let theta0 = m.params(start_box.draw(crate::estimators::start_seed(cfg.seed, r)))?;
                match method.run(m, &data, &theta0, &run_cfg) {
                    Ok(t) => times.push(t.total_seconds()),
                    Err(_) => failures += 1,
                }
            }
            let n = times.len() as f64;
            let mean = times.iter().sum::<f64>() / n;
            let sd = if times.len() > 1 {
                (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            block.push(BenchmarkRow {
                method: method.tag().into(),
                particles: j,
                runs: times.len(),
                mean_seconds: mean,
                sd_seconds: sd,
                ratio_to_if2: f64::NAN,
            });
        }
        let if2 = block.iter().find(|r| r.method == "if2").map(|r| r.mean_seconds);
        for r in &mut block {
            r.ratio_to_if2 = if2.map_or(f64::NAN, |t| r.mean_seconds / t);
        }
        rows.extend(block);
    }
    Ok((rows, failures))
}

pub fn cmd_benchmark(cfg: &RunConfig) -> Result<Report> {
    let (rows, failures) = benchmark(cfg)?;
    let p = cfg.out_dir().join("benchmark.csv");
    let mut w = create(&p)?;
    writeln!(w, "# schema: {BENCHMARK_SCHEMA}")?;
    let mut cw = csv::Writer::from_writer(&mut w);
    cw.write_record(["method", "particles", "runs", "mean_seconds", "sd_seconds", "ratio_to_if2"])?;
    let mut notes = Vec::new();
    for r in &rows {
        cw.write_record([
            r.method.clone(),
            r.particles.to_string(),
            r.runs.to_string(),
            csvio::fmt_f64(r.mean_seconds),
            csvio::fmt_f64(r.sd_seconds),
            csvio::fmt_f64(r.ratio_to_if2),
        ])?;
        notes.push(format!(
            "{:>4} J={:<5} mean {:.3}s (sd {:.3}) ratio to IF2 {:.2}",
            r.method, r.particles, r.mean_seconds, r.sd_seconds, r.ratio_to_if2
        ));
    }
    cw.flush()?;
    drop(cw);
    w.flush()?;
    Ok(Report {
        files: vec![p],
        failures,
        notes,
    })
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub runs: usize,
    pub completed: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub best: f64,
    pub success_fraction: f64,
    pub median_distance: f64,
    /// Success fraction judged by an exact log-likelihood at each final parameter.
    pub exact_success_fraction: f64,
}

/// Per-method summary against `reference` (and `mle` for distances).
pub fn summarize(
    results: &[ExperimentResult],
    reference: f64,
    threshold: f64,
    mle: Option<&[f64]>,
    exact: Option<&dyn Fn(&[f64]) -> f64>,
) -> Vec<SummaryRow> {
    let mut by_method: BTreeMap<&str, Vec<&crate::estimators::ResultRow>> = BTreeMap::new();
    for res in results {
        for row in &res.rows {
            by_method.entry(row.method.as_str()).or_default().push(row);
        }
    }
    by_method
        .into_iter()
        .map(|(method, rows)| {
            let mut ll: Vec<f64> = rows.iter().filter(|r| r.ok() && r.loglik.is_finite()).map(|r| r.loglik).collect();
            ll.sort_by(f64::total_cmp);
            let mut dist: Vec<f64> = match mle {
                Some(m) => rows
                    .iter()
                    .filter(|r| r.ok())
                    .map(|r| {
                        r.final_theta
                            .iter()
                            .zip(m)
                            .map(|(a, b)| (a - b).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect(),
                None => Vec::new(),
            };
            dist.sort_by(f64::total_cmp);
            let within = ll.iter().filter(|v| reference - **v <= threshold).count();
            let exact_success_fraction = exact.map_or(f64::NAN, |f| {
                let hits = rows
                    .iter()
                    .filter(|r| r.ok() && reference - f(&r.final_theta) <= threshold)
                    .count();
                hits as f64 / rows.len() as f64
            });
            SummaryRow {
                method: method.to_string(),
                runs: rows.len(),
                completed: ll.len(),
                median: quantile(&ll, 0.5),
                q25: quantile(&ll, 0.25),
                q75: quantile(&ll, 0.75),
                best: ll.last().copied().unwrap_or(f64::NAN),
                success_fraction: within as f64 / rows.len() as f64,
                median_distance: quantile(&dist, 0.5),
                exact_success_fraction,
            }
        })
        .collect()
}

pub fn cmd_summarize(cfg: &RunConfig) -> Result<Report> {
    if cfg.summarize.inputs.is_empty() {
        return Err(Error::Config("summarize needs [summarize].inputs".into()));
    }
    let mut results = Vec::new();
    for input in &cfg.summarize.inputs {
        let p = cfg.resolve(input);
        let f = File::open(&p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
        results.push(ExperimentResult::read_csv(f, &p.display().to_string())?);
    }
    let model = cfg.build_model()?;
    let mut mle = None;
    let mut toy_data = None;
    let reference = match cfg.summarize.reference_loglik {
        Some(r) => r,
        None => match (&model, cfg.data.is_some() || cfg.simulate.is_some()) {
            (BuiltModel::LinearGaussian(_), true) => {
                let data = cfg.load_data(&model)?;
                let k = toy_mle(cfg, &model, &data)?;
                let r = k.loglik;
                mle = Some(k.theta);
                toy_data = Some(data);
                r
            }
            _ => results
                .iter()
                .flat_map(|r| r.logliks())
                .fold(f64::NEG_INFINITY, f64::max),
        },
    };
    let exact = toy_data.map(|d| move |theta: &[f64]| toy_loglik(theta, &d).unwrap_or(f64::NEG_INFINITY));
    let rows = summarize(
        &results,
        reference,
        cfg.summarize.threshold,
        mle.as_deref(),
        exact.as_ref().map(|f| f as &dyn Fn(&[f64]) -> f64),
    );
    let out = cfg.out_dir();
    let mut report = Report::default();

    let p = out.join("summary.csv");
    let mut w = create(&p)?;
    writeln!(w, "# schema: {SUMMARY_SCHEMA}; reference={}; threshold={}", csvio::fmt_f64(reference), cfg.summarize.threshold)?;
    let mut cw = csv::Writer::from_writer(&mut w);
    cw.write_record([
        "method",
        "runs",
        "completed",
        "median",
        "q25",
        "q75",
        "iqr",
        "best",
        "success_fraction",
        "median_distance",
        "exact_success_fraction",
    ])?;
    for r in &rows {
        cw.write_record([
            r.method.clone(),
            r.runs.to_string(),
            r.completed.to_string(),
            csvio::fmt_f64(r.median),
            csvio::fmt_f64(r.q25),
            csvio::fmt_f64(r.q75),
            csvio::fmt_f64(r.q75 - r.q25),
            csvio::fmt_f64(r.best),
            csvio::fmt_f64(r.success_fraction),
            csvio::fmt_f64(r.median_distance),
            csvio::fmt_f64(r.exact_success_fraction),
        ])?;
        report.notes.push(format!(
            "{:>4}: median {:.3} IQR {:.3} success {:.0}% (exact {:.0}%)",
            r.method,
            r.median,
            r.q75 - r.q25,
            100.0 * r.success_fraction,
            100.0 * r.exact_success_fraction
        ));
    }
    cw.flush()?;
    drop(cw);
    w.flush()?;
    report.files.push(p);

    let p = out.join("density.csv");
    let mut w = create(&p)?;
    writeln!(w, "# schema: {DENSITY_SCHEMA}")?;
    let mut cw = csv::Writer::from_writer(&mut w);
    cw.write_record(["method", "loglik"])?;
    for res in &results {
        for row in res.rows.iter().filter(|r| r.ok()) {
            cw.write_record([row.method.clone(), csvio::fmt_f64(row.loglik)])?;
        }
    }
    cw.flush()?;
    drop(cw);
    w.flush()?;
    report.files.push(p);
    Ok(report)
}
