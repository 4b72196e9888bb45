//! Fixed batteries of experiments: the oracle suite and the exponent fit.

use std::f64::consts::PI;

use super::{fit_exponent, run_experiment, ExperimentConfig, OracleRow, Probe, Report};
use crate::error::Result;
use crate::params::{Regime, SleParams};

/// Angles of the left-passage grid.
pub const LEFT_PASSAGE_ANGLES: [f64; 4] = [PI / 6.0, PI / 3.0, PI / 2.0, 2.0 * PI / 3.0];

/// Default probe sizes for the exponent fit.
pub const FIT_RADII: [f64; 4] = [1.0 / 3.0, 0.23, 0.16, 0.11];

// Per-experiment trial caps inside the suite. The cheap, tight comparisons
// get the full count; the slow ones are capped so one suite run stays short.
const LEFT_PASSAGE_CAP: u64 = 5000;
const DIAMETER_CAP: u64 = 1000;
const TOGETHER_CAP: u64 = 3000;

/// Shared settings of a battery. `dt` and `horizon` replace the per-probe
/// defaults when set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Battery {
    pub params: SleParams,
    pub n_trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub level: f64,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
}

impl Battery {
    pub fn new(params: SleParams, n_trials: u64, seed: u64) -> Self {
        Battery { params, n_trials, seed, workers: 0, level: 0.99, dt: None, horizon: None }
    }

    fn config(&self, probe: Probe, n_trials: u64) -> ExperimentConfig {
        let mut config = ExperimentConfig::new(self.params, probe, n_trials, self.seed);
        config.level = self.level;
        if let Some(dt) = self.dt {
            config.dt = dt;
        }
        if let Some(h) = self.horizon {
            config.horizon = h;
        }
        config
    }
}

fn is(params: &SleParams, kappa: f64) -> bool {
    (params.kappa() - kappa).abs() < 1e-12
}

/// Every comparison with a known exact value at this kappa, in a fixed
/// order. Intervals are reported at `level`.
pub fn oracle_suite(battery: &Battery) -> Result<Report> {
    let (params, n_trials) = (battery.params, battery.n_trials);
    let mut plan: Vec<(String, Probe, u64)> = Vec::new();
    if is(&params, 8.0 / 3.0) {
        plan.push(("semicircle".into(), Probe::semicircle(0.25), n_trials));
    }
    for (k, theta) in LEFT_PASSAGE_ANGLES.iter().enumerate() {
        let probe = Probe::LeftPassage { theta: *theta, modulus: 1.0 };
        plan.push((format!("leftpass_{k}"), probe, n_trials.min(LEFT_PASSAGE_CAP)));
    }
    plan.push(("interval".into(), Probe::interval(0.1), n_trials));
    if params.regime() == Regime::Touching {
        plan.push(("together".into(), Probe::together_top(0.2), n_trials.min(TOGETHER_CAP)));
    }
    if is(&params, 8.0 / 3.0) {
        plan.push(("diameter".into(), Probe::Diameter { big_r: 4.0 }, n_trials.min(DIAMETER_CAP)));
    }

    let mut report = Report { rows: Vec::new(), results: Vec::new(), fit: None };
    for (id, probe, n) in plan {
        let result = run_experiment(&battery.config(probe, n), battery.workers)?;
        report.rows.push(OracleRow::new(&id, &result, battery.level)?);
        if id == "semicircle" {
            report.rows.push(OracleRow::restriction("semicircle_avoid", &result, battery.level)?);
        }
        report.results.push(result);
    }
    Ok(report)
}

/// The exponent of r in the hitting probability of C(1; r) for small r.
pub fn target_exponent(params: &SleParams) -> f64 {
    8.0 / params.kappa() - 1.0
}

/// Semicircle runs over `radii` and a power-law fit through them.
pub fn exponent_fit(battery: &Battery, radii: &[f64]) -> Result<Report> {
    let mut report = Report { rows: Vec::new(), results: Vec::new(), fit: None };
    let mut estimates = Vec::new();
    for (k, r) in radii.iter().enumerate() {
        let config = battery.config(Probe::semicircle(*r), battery.n_trials);
        let result = run_experiment(&config, battery.workers)?;
        estimates.push((*r, result.estimate));
        report.rows.push(OracleRow::new(&format!("fit_{k}"), &result, battery.level)?);
        report.results.push(result);
    }
    report.fit = Some(fit_exponent(&estimates)?);
    Ok(report)
}
