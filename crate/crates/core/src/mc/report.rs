//! Comparison rows against exact values, as CSV and JSON.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{oracle, ExperimentResult, ExponentFit, HitEstimate};
use crate::error::{Result, SleError};
use crate::exact;

/// One experiment next to its exact value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub experiment_id: String,
    pub kappa: f64,
    pub probe: String,
    pub r: f64,
    pub n_trials: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub oracle: Option<f64>,
    pub z_score: Option<f64>,
    pub covered: Option<bool>,
}

impl OracleRow {
    /// Row for `result`, with the interval taken at `level`.
    pub fn new(experiment_id: &str, result: &ExperimentResult, level: f64) -> Result<Self> {
        let value = oracle(&result.config)?;
        Self::build(experiment_id, result, result.estimate.at_level(level)?, value, result.config.probe.label())
    }

    /// Avoidance row for a kappa = 8/3 semicircle run: 1 - p_hat against
    /// (1 - r^2)^(5/8).
    pub fn restriction(experiment_id: &str, result: &ExperimentResult, level: f64) -> Result<Self> {
        let e = result.estimate;
        let avoid = HitEstimate::wilson(e.trials - e.hits, e.trials, e.discarded, level)?;
        let r = result.config.probe.ratio();
        let value = exact::restriction_probability(1.0 - r * r)?;
        Self::build(experiment_id, result, avoid, Some(value), format!("avoid {}", result.config.probe.label()))
    }

    fn build(id: &str, result: &ExperimentResult, e: HitEstimate, value: Option<f64>, probe: String) -> Result<Self> {
        Ok(OracleRow {
            experiment_id: id.to_string(),
            kappa: result.config.params.kappa(),
            probe,
            r: result.config.probe.ratio(),
            n_trials: result.config.n_trials,
            hits: e.hits,
            p_hat: e.p_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            oracle: value,
            z_score: value.map(|p| e.z_score(p)),
            covered: value.map(|p| e.covers(p)),
        })
    }
}

/// Rows plus the full results they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<OracleRow>,
    pub results: Vec<ExperimentResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<ExponentFit>,
}

impl Report {
    /// Every row with an exact value covers it.
    pub fn all_covered(&self) -> bool {
        self.rows.iter().all(|r| r.covered != Some(false))
    }
}

fn io(e: impl std::fmt::Display) -> SleError {
    SleError::Numerical(format!("writing results: {e}"))
}

/// Columns `experiment_id, kappa, probe, r, n_trials, hits, p_hat, ci_low,
/// ci_high, oracle, z_score`; a missing oracle leaves the last two empty.
pub fn write_csv<W: Write>(rows: &[OracleRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["experiment_id", "kappa", "probe", "r", "n_trials", "hits", "p_hat", "ci_low", "ci_high", "oracle", "z_score"])
        .map_err(io)?;
    for r in rows {
        w.serialize((
            &r.experiment_id,
            r.kappa,
            &r.probe,
            r.r,
            r.n_trials,
            r.hits,
            r.p_hat,
            r.ci_low,
            r.ci_high,
            r.oracle,
            r.z_score,
        ))
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_json<W: Write>(report: &Report, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, report).map_err(io)
}
