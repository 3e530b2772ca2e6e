//! Observed time series and covariate tables.

use std::io::{Read, Write};
use std::path::Path;

use crate::csvio;
use crate::error::{Error, Result};

pub const DATASET_SCHEMA: &str = "aif.dataset/1";
pub const COVARIATE_SCHEMA: &str = "aif.covariates/1";

/// Covariate table, looked up piecewise-constant in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Covariates {
    pub fn new(times: Vec<f64>, names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_increasing(&times)?;
        if rows.len() != times.len() {
            return Err(Error::Dimension {
                what: "covariate rows".into(),
                expected: times.len(),
                got: rows.len(),
            });
        }
        if let Some(r) = rows.iter().find(|r| r.len() != names.len()) {
            return Err(Error::Dimension {
                what: "covariate row width".into(),
                expected: names.len(),
                got: r.len(),
            });
        }
        Ok(Self { times, names, rows })
    }

    /// Row in force at time `t`: the last row whose time is `<= t`, or the
    /// first row when `t` precedes the table.
    pub fn at(&self, t: f64) -> &[f64] {
        let idx = self.times.partition_point(|&s| s <= t);
        &self.rows[idx.saturating_sub(1)]
    }

    /// Read a `(time, name_1, ...)` CSV table.
    pub fn read_csv<R: Read>(reader: R, source: &str) -> Result<Self> {
        let (header, rows) = csvio::read_table(reader, source)?;
        if header.len() < 2 {
            return Err(Error::Schema {
                file: source.into(),
                detail: "expected a time column and at least one covariate".into(),
            });
        }
        let times = rows.iter().map(|r| r[0]).collect();
        let values = rows.into_iter().map(|r| r[1..].to_vec()).collect();
        Self::new(times, header[1..].to_vec(), values)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(f, &path.display().to_string())
    }

    /// Write as `(time_label, name_1, ...)` CSV under a schema comment.
    pub fn write_csv<W: Write>(&self, mut w: W, time_label: &str) -> Result<()> {
        writeln!(w, "# schema: {COVARIATE_SCHEMA}")?;
        let mut header = vec![time_label.to_string()];
        header.extend(self.names.iter().cloned());
        let rows = self.times.iter().zip(&self.rows).map(|(t, r)| {
            let mut row = vec![*t];
            row.extend_from_slice(r);
            row
        });
        csvio::write_table(w, &header, rows)
    }
}

/// Observation times, one fixed-width observation row per time, and optional covariates.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesData {
    pub t0: f64,
    pub times: Vec<f64>,
    pub observations: Vec<Vec<f64>>,
    pub covariates: Option<Covariates>,
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if let Some(bad) = times.iter().position(|t| !t.is_finite()) {
        return Err(Error::NonFinite {
            n: bad,
            what: "time".into(),
        });
    }
    if let Some(w) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!(
            "times must be strictly increasing (index {})",
            w + 1
        )));
    }
    Ok(())
}

impl TimeSeriesData {
    /// `t0` is the time of the initial state and must precede `times[0]`.
    pub fn new(t0: f64, times: Vec<f64>, observations: Vec<Vec<f64>>) -> Result<Self> {
        check_increasing(&times)?;
        if let Some(&first) = times.first() {
            if first <= t0 {
                return Err(Error::InvalidArgument(
                    "initial time must precede the first observation".into(),
                ));
            }
        }
        if observations.len() != times.len() {
            return Err(Error::Dimension {
                what: "observation rows".into(),
                expected: times.len(),
                got: observations.len(),
            });
        }
        if let Some(first) = observations.first() {
            let d = first.len();
            if let Some(r) = observations.iter().find(|r| r.len() != d) {
                return Err(Error::Dimension {
                    what: "observation width".into(),
                    expected: d,
                    got: r.len(),
                });
            }
        }
        Ok(Self {
            t0,
            times,
            observations,
            covariates: None,
        })
    }

    pub fn with_covariates(mut self, cov: Covariates) -> Self {
        self.covariates = Some(cov);
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn obs_dim(&self) -> usize {
        self.observations.first().map_or(0, Vec::len)
    }

    /// Time preceding observation `n` (the initial time for `n == 0`).
    pub fn prev_time(&self, n: usize) -> f64 {
        if n == 0 {
            self.t0
        } else {
            self.times[n - 1]
        }
    }

    /// First `n` observations.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            t0: self.t0,
            times: self.times[..n].to_vec(),
            observations: self.observations[..n].to_vec(),
            covariates: self.covariates.clone(),
        }
    }

    /// Write as `(time, y_1..y_d)` CSV preceded by a schema comment line.
    /// The initial time is recorded in the comment.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema: {DATASET_SCHEMA}; t0={}", self.t0)?;
        let mut header = vec!["time".to_string()];
        header.extend((1..=self.obs_dim()).map(|i| format!("y_{i}")));
        let rows = self.times.iter().zip(&self.observations).map(|(t, y)| {
            let mut r = vec![*t];
            r.extend_from_slice(y);
            r
        });
        csvio::write_table(w, &header, rows)
    }

    pub fn read_csv<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut text = String::new();
        let mut reader = reader;
        reader.read_to_string(&mut text)?;
        let t0 = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| {
                l.split(';')
                    .find_map(|kv| kv.trim().strip_prefix("t0="))
                    .and_then(|v| v.trim().parse::<f64>().ok())
            })
            .unwrap_or(0.0);
        let (header, rows) = csvio::read_table(text.as_bytes(), source)?;
        if header.first().map(String::as_str) != Some("time") {
            return Err(Error::Schema {
                file: source.into(),
                detail: "first column must be `time`".into(),
            });
        }
        let times = rows.iter().map(|r| r[0]).collect();
        let obs = rows.into_iter().map(|r| r[1..].to_vec()).collect();
        Self::new(t0, times, obs)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(f, &path.display().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_increasing_times() {
        assert!(TimeSeriesData::new(0.0, vec![1.0, 1.0], vec![vec![0.0], vec![0.0]]).is_err());
        assert!(TimeSeriesData::new(1.0, vec![1.0, 2.0], vec![vec![0.0], vec![0.0]]).is_err());
        assert!(TimeSeriesData::new(0.0, vec![1.0, 2.0], vec![vec![0.0]]).is_err());
        assert!(TimeSeriesData::new(0.0, vec![1.0, 2.0], vec![vec![0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn covariates_piecewise_constant() {
        let c = Covariates::new(
            vec![0.0, 1.0, 2.0],
            vec!["rain".into()],
            vec![vec![10.0], vec![20.0], vec![30.0]],
        )
        .unwrap();
        assert_eq!(c.at(-1.0), &[10.0]);
        assert_eq!(c.at(0.0), &[10.0]);
        assert_eq!(c.at(0.99), &[10.0]);
        assert_eq!(c.at(1.0), &[20.0]);
        assert_eq!(c.at(5.0), &[30.0]);
    }

    #[test]
    fn csv_round_trip() {
        let d = TimeSeriesData::new(
            0.5,
            vec![1.0, 2.0, 3.0],
            vec![vec![0.1, -2.0], vec![1e-17, 3.5], vec![4.0, 1e300]],
        )
        .unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# schema: aif.dataset/1"));
        let back = TimeSeriesData::read_csv(&buf[..], "mem").unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn covariate_csv() {
        let text = "# schema: aif.covariates/1\nmonth,rainfall\n0,1.5\n1,2.5\n";
        let c = Covariates::read_csv(text.as_bytes(), "mem").unwrap();
        assert_eq!(c.names, vec!["rainfall"]);
        assert_eq!(c.at(1.2), &[2.5]);
    }
}
