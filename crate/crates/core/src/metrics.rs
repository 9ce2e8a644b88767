//! Per-round metrics and the CSV schema they are written in.

use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::objective::LogisticObjective;
use crate::sparse::{DenseModel, SparseDataset};

pub const CSV_HEADER: &str = "algorithm,round,objective,suboptimality,test_error,wall_ms,diverged";

/// Receives the shared model after every communication round.
pub trait RoundSink {
    fn record(&mut self, round: usize, w: &DenseModel, objective: f64);
}

/// Keeps `(round, objective)` pairs.
impl RoundSink for Vec<(usize, f64)> {
    fn record(&mut self, round: usize, _w: &DenseModel, objective: f64) {
        self.push((round, objective));
    }
}

/// Discards everything.
pub struct NullSink;

impl RoundSink for NullSink {
    fn record(&mut self, _round: usize, _w: &DenseModel, _objective: f64) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub algorithm: String,
    pub round: usize,
    pub objective: f64,
    pub suboptimality: f64,
    pub test_error: f64,
    pub wall_ms: u64,
    pub diverged: bool,
}

impl RoundMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.algorithm,
            self.round,
            self.objective,
            self.suboptimality,
            self.test_error,
            self.wall_ms,
            self.diverged
        )
    }
}

/// Renders rows under [`CSV_HEADER`].
pub fn to_csv(rows: &[RoundMetrics]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<RoundMetrics>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header {CSV_HEADER:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse {
            line: no + 1,
            msg: format!("bad {what} in {line:?}"),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad("field count"));
        }
        rows.push(RoundMetrics {
            algorithm: f[0].to_string(),
            round: f[1].parse().map_err(|_| bad("round"))?,
            objective: f[2].parse().map_err(|_| bad("objective"))?,
            suboptimality: f[3].parse().map_err(|_| bad("suboptimality"))?,
            test_error: f[4].parse().map_err(|_| bad("test_error"))?,
            wall_ms: f[5].parse().map_err(|_| bad("wall_ms"))?,
            diverged: f[6].parse().map_err(|_| bad("diverged"))?,
        });
    }
    Ok(rows)
}

/// Turns models into [`RoundMetrics`] rows: suboptimality against `f_star`
/// and error on an optional test set.
pub struct MetricsRecorder<'a> {
    algorithm: String,
    objective: &'a LogisticObjective<'a>,
    f_star: Option<f64>,
    test: Option<&'a SparseDataset>,
    timing: bool,
    start: Instant,
    rows: Vec<RoundMetrics>,
}

impl<'a> MetricsRecorder<'a> {
    pub fn new(algorithm: impl Into<String>, objective: &'a LogisticObjective<'a>) -> Self {
        MetricsRecorder {
            algorithm: algorithm.into(),
            objective,
            f_star: None,
            test: None,
            timing: true,
            start: Instant::now(),
            rows: Vec::new(),
        }
    }

    pub fn with_f_star(mut self, f_star: f64) -> Self {
        self.f_star = Some(f_star);
        self
    }

    pub fn with_test(mut self, test: &'a SparseDataset) -> Self {
        self.test = Some(test);
        self
    }

    /// With timing off every `wall_ms` is 0, making output reproducible.
    pub fn with_timing(mut self, timing: bool) -> Self {
        self.timing = timing;
        self
    }

    fn wall_ms(&self) -> u64 {
        if self.timing {
            self.start.elapsed().as_millis() as u64
        } else {
            0
        }
    }

    /// Records the starting point as round 0.
    pub fn record_initial(&mut self, w: &DenseModel) -> Result<()> {
        let f = self.objective.value(w)?;
        self.record(0, w, f);
        Ok(())
    }

    /// Appends a terminal row flagging divergence at `round`.
    pub fn record_divergence(&mut self, round: usize) {
        let wall_ms = self.wall_ms();
        let test_error = self.rows.last().map_or(f64::NAN, |r| r.test_error);
        self.rows.push(RoundMetrics {
            algorithm: self.algorithm.clone(),
            round,
            objective: f64::INFINITY,
            suboptimality: f64::INFINITY,
            test_error,
            wall_ms,
            diverged: true,
        });
    }

    pub fn rows(&self) -> &[RoundMetrics] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<RoundMetrics> {
        self.rows
    }
}

impl RoundSink for MetricsRecorder<'_> {
    fn record(&mut self, round: usize, w: &DenseModel, objective: f64) {
        let suboptimality = self.f_star.map_or(f64::NAN, |fs| objective - fs);
        let test_error = self
            .test
            .and_then(|t| self.objective.test_error(w, t).ok())
            .unwrap_or(f64::NAN);
        let wall_ms = self.wall_ms();
        self.rows.push(RoundMetrics {
            algorithm: self.algorithm.clone(),
            round,
            objective,
            suboptimality,
            test_error,
            wall_ms,
            diverged: false,
        });
    }
}
