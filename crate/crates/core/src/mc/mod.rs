//! Monte Carlo experiments over independent trials.
//!
//! Trial `k` of an experiment uses the driver stream `(seed, k)`, and the
//! tally only counts outcomes, so results do not depend on how trials are
//! spread over threads.

mod report;
mod stats;
mod suite;

pub use report::{write_csv, write_json, OracleRow, Report};
pub use stats::{fit_exponent, normal_quantile, ExponentFit, HitEstimate};
pub use suite::{exponent_fit, Battery, oracle_suite, target_exponent, FIT_RADII, LEFT_PASSAGE_ANGLES};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SleError};
use crate::exact;
use crate::maps::Semicircle;
use crate::numerics::Quadrature;
use crate::params::{Regime, SleParams};
use crate::sim::{self, DriverPath, IntervalConditions};

/// What a trial looks for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Probe {
    /// the curve meets C(center; radius)
    Semicircle { center: f64, radius: f64 },
    /// the curve lands in [x_lo, x_hi]
    Interval { x_lo: f64, x_hi: f64 },
    /// `modulus e^{i theta}` ends up left of the curve
    LeftPassage { theta: f64, modulus: f64 },
    /// the sampled ring C(1 - r; r/2) is swallowed together with 1
    Ring { r: f64 },
    /// the single point `z` is swallowed together with 1
    Together { re: f64, im: f64 },
    /// the curve from 0 to 1 reaches C(0; big_r)
    Diameter { big_r: f64 },
}

impl Probe {
    /// Semicircle C(1; r).
    pub fn semicircle(r: f64) -> Self {
        Probe::Semicircle { center: 1.0, radius: r }
    }

    /// Interval [1 - r, 1 + r].
    pub fn interval(r: f64) -> Self {
        Probe::Interval { x_lo: 1.0 - r, x_hi: 1.0 + r }
    }

    /// The point of the ring C(1 - r; r/2) straight above its center.
    pub fn together_top(r: f64) -> Self {
        Probe::Together { re: 1.0 - r, im: 0.5 * r }
    }

    /// Short label for tables.
    pub fn label(&self) -> String {
        match *self {
            Probe::Semicircle { center, radius } => format!("semicircle({center};{radius})"),
            Probe::Interval { x_lo, x_hi } => format!("interval[{x_lo};{x_hi}]"),
            Probe::LeftPassage { theta, modulus } => format!("leftpass({modulus}e^i{theta:.6})"),
            Probe::Ring { r } => format!("ring({r})"),
            Probe::Together { re, im } => format!("together({re}+{im}i)"),
            Probe::Diameter { big_r } => format!("diameter({big_r})"),
        }
    }

    /// The size parameter r of the probe.
    pub fn ratio(&self) -> f64 {
        match *self {
            Probe::Semicircle { center, radius } => radius / center.abs(),
            Probe::Interval { x_lo, x_hi } => (x_hi - x_lo) / (x_hi + x_lo),
            Probe::LeftPassage { theta, .. } => theta,
            Probe::Ring { r } => r,
            Probe::Together { re, im } => (re - 1.0).hypot(im),
            Probe::Diameter { big_r } => 1.0 / big_r,
        }
    }

    /// Distance scale of the probe from the origin.
    pub fn scale(&self) -> f64 {
        match *self {
            Probe::Semicircle { center, radius } => center.abs() + radius,
            Probe::Interval { x_hi, .. } => x_hi,
            Probe::LeftPassage { modulus, .. } => modulus,
            Probe::Ring { .. } | Probe::Together { .. } => 1.0,
            // C(-1; 1/R) after the Moebius map
            Probe::Diameter { big_r } => 1.0 + 1.0 / big_r,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: SleParams,
    pub probe: Probe,
    pub n_trials: u64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    #[serde(default = "default_ring_samples")]
    pub n_ring_samples: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_ring_samples() -> usize {
    64
}

fn default_level() -> f64 {
    0.95
}

/// Default fine step.
pub const DEFAULT_DT: f64 = 2.5e-5;

impl ExperimentConfig {
    /// Config with the default step, horizon and level.
    pub fn new(params: SleParams, probe: Probe, n_trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            params,
            probe,
            n_trials,
            dt: DEFAULT_DT,
            horizon: sim::default_horizon(&params, probe.scale()),
            seed,
            n_ring_samples: default_ring_samples(),
            level: default_level(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials < 100 {
            return domain(format!("need at least 100 trials, got {}", self.n_trials));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return domain(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= 1.0 && self.horizon.is_finite()) {
            return domain(format!("horizon must be at least 1, got {}", self.horizon));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return domain(format!("confidence level must lie in (0, 1), got {}", self.level));
        }
        let touching = self.params.regime() == Regime::Touching;
        match self.probe {
            Probe::Semicircle { center, radius } if !(radius > 0.0 && radius < center.abs()) => {
                domain("the semicircle must not surround the origin")
            }
            Probe::Interval { x_lo, x_hi } if !(0.0 < x_lo && x_lo < x_hi) => domain("need 0 < x_lo < x_hi"),
            Probe::LeftPassage { theta, modulus } if !(theta > 0.0 && theta < std::f64::consts::PI && modulus > 0.0) => {
                domain("left passage needs theta in (0, pi) and a positive modulus")
            }
            Probe::Ring { r } if !(r > 0.0 && r <= 1.0 / 3.0) => domain("ring parameter must lie in (0, 1/3]"),
            Probe::Ring { .. } if self.n_ring_samples < 8 => domain("need at least 8 ring samples"),
            Probe::Ring { .. } | Probe::Together { .. } if !touching => {
                Err(SleError::Regime("swallowing needs kappa > 4".into()))
            }
            Probe::Together { im, .. } if !(im >= 0.0) => domain("the point must lie in the closed upper half plane"),
            Probe::Diameter { big_r } if !(big_r >= 3.0) => domain("diameter ratio R must be at least 3"),
            _ => Ok(()),
        }
    }
}

/// What one trial decided. `None` means undecided at the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub hit: Option<bool>,
    pub interval: Option<IntervalConditions>,
    /// the diameter event read from the image path, for the coupling check
    pub image_hit: Option<bool>,
}

/// Runs trial `trial_id` of `config`.
pub fn run_trial(config: &ExperimentConfig, trial_id: u64) -> Result<Trial> {
    let driver = sim::sample_driver(&config.params, config.dt, config.horizon, config.seed, trial_id)?;
    trial_on(config, &driver)
}

fn trial_on(config: &ExperimentConfig, driver: &DriverPath) -> Result<Trial> {
    let eps = sim::default_swallow_eps(config.dt);
    let mut trial = Trial { hit: None, interval: None, image_hit: None };
    match config.probe {
        Probe::Semicircle { center, radius } => {
            let probe = Semicircle::new(center, radius)?;
            let (o, _) = sim::hit_semicircle_flow(driver, &probe, eps, sim::StepPolicy::default())?;
            let decided = o.event_hit || o.enclosed || config.params.regime() == Regime::Simple;
            trial.hit = decided.then_some(o.event_hit);
        }
        Probe::Interval { x_lo, x_hi } => {
            let o = sim::hit_interval(driver, x_lo, x_hi, eps)?;
            trial.hit = Some(o.event_hit);
            trial.interval = o.interval;
        }
        Probe::LeftPassage { theta, modulus } => {
            trial.hit = sim::left_passage_indicator(driver, Complex64::from_polar(modulus, theta), eps)?;
        }
        Probe::Ring { r } => {
            trial.hit = sim::swallow_together(driver, &config.params, r, config.n_ring_samples, eps)?;
        }
        Probe::Together { re, im } => {
            trial.hit = sim::swallow_together_points(driver, &[Complex64::new(re, im)], eps)?;
        }
        Probe::Diameter { big_r } => {
            let o = sim::diameter_event(driver, 1.0, big_r, eps)?;
            trial.hit = Some(o.standard_hit);
            trial.image_hit = Some(o.image_hit);
        }
    }
    Ok(trial)
}

/// Everything an experiment produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub estimate: HitEstimate,
    /// trials lost to numerical failures (also counted in `discarded`)
    pub failures: u64,
    /// interval runs: frequencies of the split and touched sub-conditions
    pub split_rate: Option<f64>,
    pub touched_rate: Option<f64>,
    /// diameter runs: fraction of trials where both readings agree
    pub coupling_agreement: Option<f64>,
}

/// Trials that fail numerically are discarded, up to this fraction.
const FAILURE_BUDGET: f64 = 0.01;

/// Runs every trial on `workers` threads (0 = all cores).
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SleError::Numerical(format!("thread pool: {e}")))?;
    let trials: Vec<Result<Trial>> =
        pool.install(|| (0..config.n_trials).into_par_iter().map(|k| run_trial(config, k)).collect());
    summarize(config, trials)
}

fn summarize(config: &ExperimentConfig, trials: Vec<Result<Trial>>) -> Result<ExperimentResult> {
    let mut failures = 0u64;
    let mut first_failure = None;
    let (mut hits, mut decided) = (0u64, 0u64);
    let (mut split, mut touched, mut with_interval) = (0u64, 0u64, 0u64);
    let (mut agree, mut coupled) = (0u64, 0u64);
    for t in trials {
        let t = match t {
            Ok(t) => t,
            Err(e) => {
                failures += 1;
                first_failure.get_or_insert(e);
                continue;
            }
        };
        if let Some(h) = t.hit {
            decided += 1;
            hits += h as u64;
        }
        if let Some(c) = t.interval {
            with_interval += 1;
            split += c.split as u64;
            touched += c.touched as u64;
        }
        if let (Some(a), Some(b)) = (t.hit, t.image_hit) {
            coupled += 1;
            agree += (a == b) as u64;
        }
    }
    if failures as f64 > FAILURE_BUDGET * config.n_trials as f64 {
        return Err(first_failure.expect("failures were counted"));
    }
    let rate = |k: u64, n: u64| (n > 0).then(|| k as f64 / n as f64);
    Ok(ExperimentResult {
        config: *config,
        estimate: HitEstimate::wilson(hits, decided, config.n_trials - decided, config.level)?,
        failures,
        split_rate: rate(split, with_interval),
        touched_rate: rate(touched, with_interval),
        coupling_agreement: rate(agree, coupled),
    })
}

/// Exact value of the experiment's probability, where one is known.
pub fn oracle(config: &ExperimentConfig) -> Result<Option<f64>> {
    let params = &config.params;
    let quad = Quadrature::default();
    let kappa = params.kappa();
    let is = |k: f64| (kappa - k).abs() < 1e-12;
    Ok(match config.probe {
        Probe::Semicircle { center, radius } if center > 0.0 && is(8.0 / 3.0) => {
            Some(exact::semicircle_hit_exact_83(radius / center)?)
        }
        Probe::Semicircle { center, radius } if center > 0.0 && is(6.0) => {
            Some(exact::semicircle_hit_exact_6(radius / center)?)
        }
        Probe::Interval { .. } if params.regime() == Regime::Simple => Some(0.0),
        Probe::Interval { .. } => Some(exact::interval_hit_probability(config.probe.ratio(), params, &quad)?),
        Probe::LeftPassage { theta, .. } => Some(exact::left_passage_probability(theta, params, &quad)?),
        Probe::Together { re, im } => Some(exact::swallow_split(Complex64::new(re, im), params, &quad)?.p_same),
        Probe::Diameter { big_r } if is(8.0 / 3.0) => Some(exact::diameter_hit_exact_83(big_r)?),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn wilson_coverage() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let covered = (0..1000)
            .filter(|_| {
                let hits = (0..500).filter(|_| rng.random::<f64>() < 0.1).count() as u64;
                HitEstimate::wilson(hits, 500, 0, 0.95).unwrap().covers(0.1)
            })
            .count();
        assert!((930..=970).contains(&covered), "{covered}");
    }

    fn cfg(kappa: f64, probe: Probe, n: u64) -> ExperimentConfig {
        ExperimentConfig::new(SleParams::new(kappa).unwrap(), probe, n, 5)
    }

    #[test]
    fn far_probe_is_never_hit() {
        let mut c = cfg(8.0 / 3.0, Probe::Semicircle { center: 1e6, radius: 0.25e6 }, 100);
        c.horizon = 1.0;
        c.dt = 1e-3;
        let r = run_experiment(&c, 1).unwrap();
        assert_eq!((r.estimate.hits, r.estimate.p_hat, r.estimate.ci_low), (0, 0.0, 0.0));
        assert_eq!(r.estimate.trials, 100);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let mut c = cfg(6.0, Probe::interval(0.1), 100);
        c.dt = 1e-3;
        let one = run_experiment(&c, 1).unwrap();
        let four = run_experiment(&c, 4).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, run_experiment(&c, 1).unwrap());
    }

    #[test]
    fn configs_are_validated() {
        assert!(cfg(6.0, Probe::semicircle(0.2), 99).validate().is_err());
        assert!(cfg(2.0, Probe::Ring { r: 0.2 }, 100).validate().is_err());
        assert!(cfg(6.0, Probe::Ring { r: 0.5 }, 100).validate().is_err());
        assert!(cfg(6.0, Probe::Semicircle { center: 0.1, radius: 0.2 }, 100).validate().is_err());
        assert!(cfg(8.0 / 3.0, Probe::Diameter { big_r: 4.0 }, 100).validate().is_ok());
        let json = serde_json::to_string(&cfg(6.0, Probe::semicircle(0.2), 100)).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg(6.0, Probe::semicircle(0.2), 100));
    }

    #[test]
    fn oracles_by_probe() {
        let c = cfg(8.0 / 3.0, Probe::semicircle(0.25), 100);
        assert!((oracle(&c).unwrap().unwrap() - (1.0 - 0.9375f64.powf(0.625))).abs() < 1e-14);
        let lp = cfg(8.0 / 3.0, Probe::LeftPassage { theta: std::f64::consts::FRAC_PI_2, modulus: 1.0 }, 100);
        assert!((oracle(&lp).unwrap().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(oracle(&cfg(2.0, Probe::interval(0.1), 100)).unwrap(), Some(0.0));
        assert_eq!(oracle(&cfg(6.0, Probe::Ring { r: 0.2 }, 100)).unwrap(), None);
    }
}
