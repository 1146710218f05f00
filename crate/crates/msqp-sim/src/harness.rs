//! Experiment runner: scenario configs, seeded Monte Carlo sweeps, CSV
//! emission. Every number in the output is a pure function of the config
//! file and the base seed.

pub mod config;
pub mod scenarios;

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use config::{ExperimentConfig, Overrides};

/// One emitted measurement. `variable` is the swept quantity's value for
/// this row (scenario-specific meaning, 0 for scalar outputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub variable: f64,
    pub metric: String,
    pub value: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Conservative two-sided 95% half-width for a rate estimated from
/// `trials` Bernoulli draws, using the worst-case variance so more trials
/// always mean a tighter interval.
pub fn rate_ci_halfwidth(trials: u64) -> f64 {
    1.96 * (0.25 / trials as f64).sqrt()
}

/// Runs the configured scenario end to end.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    match cfg.scenario {
        config::Scenario::Papr => scenarios::run_papr(cfg),
        config::Scenario::RootDesign => scenarios::run_root_design(cfg),
        config::Scenario::FalseAlarm => scenarios::run_false_alarm(cfg),
        config::Scenario::Ranging => scenarios::run_ranging_velocity(cfg, scenarios::Axis::Range),
        config::Scenario::Velocity => {
            scenarios::run_ranging_velocity(cfg, scenarios::Axis::Velocity)
        }
        config::Scenario::Tradeoff => scenarios::run_tradeoff(cfg),
        config::Scenario::Xcorr => scenarios::run_xcorr(cfg),
        config::Scenario::LoopbackBer => scenarios::run_loopback_ber(cfg),
    }
}

/// Serializes rows as CSV with a header, stable column order.
pub fn emit_csv(rows: &[ResultRow], mut w: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(&mut w);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::arg(format!("csv serialization failed: {e}")))?;
    }
    // An empty run still gets its header line.
    if rows.is_empty() {
        writer
            .write_record(["scenario", "variable", "metric", "value", "trials", "seed"])
            .map_err(|e| Error::arg(format!("csv serialization failed: {e}")))?;
    }
    writer.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })?;
    Ok(())
}

pub fn write_rows(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
    emit_csv(rows, file)
}

pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let io = |e: std::io::Error| Error::Io { path: path.display().to_string(), source: e };
    let file = File::open(path).map_err(io)?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::arg(format!("csv parse failed: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows(n: usize) -> Vec<ResultRow> {
        (0..n)
            .map(|i| ResultRow {
                scenario: "papr".into(),
                variable: i as f64 * 0.5,
                metric: format!("metric_{}", i % 7),
                value: (i as f64).sin() * 1e-3,
                trials: 200,
                seed: 42,
            })
            .collect()
    }

    #[test]
    fn csv_is_byte_identical_across_runs() {
        let rows = sample_rows(50);
        let mut a = Vec::new();
        let mut b = Vec::new();
        emit_csv(&rows, &mut a).unwrap();
        emit_csv(&rows, &mut b).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(b"scenario,variable,metric,value,trials,seed\n"));
    }

    #[test]
    fn empty_row_list_still_writes_the_header() {
        let mut buf = Vec::new();
        emit_csv(&[], &mut buf).unwrap();
        assert_eq!(buf, b"scenario,variable,metric,value,trials,seed\n");
    }

    #[test]
    fn ten_thousand_rows_round_trip() {
        let rows = sample_rows(10_000);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        write_rows(&rows, &path).unwrap();
        assert_eq!(read_rows(&path).unwrap(), rows);
    }

    #[test]
    fn ci_halfwidth_shrinks_with_trials() {
        let mut last = f64::INFINITY;
        for trials in [10u64, 100, 1000, 10_000] {
            let hw = rate_ci_halfwidth(trials);
            assert!(hw < last);
            last = hw;
        }
    }
}
