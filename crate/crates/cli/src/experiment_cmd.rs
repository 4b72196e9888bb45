use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Deserialize;
use sle_lab::mc::{
    exponent_fit, oracle_suite, run_experiment, target_exponent, write_csv, write_json, Battery, ExperimentConfig,
    OracleRow, Probe, Report, FIT_RADII,
};
use sle_lab::SleParams;

use crate::output::write_atomically;
use crate::{parse_angle, parse_kappa, resolve_seed, Failure, KAPPA_HELP};

const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// P{curve meets C(1; r)}: 1 - (1 - r^2)^(5/8) at kappa = 8/3 by restriction, a
    /// beta-function formula at kappa = 6 by locality, order r^(8/kappa - 1) in general
    Semicircle,
    /// P{curve lands in [1 - r, 1 + r]} for 4 < kappa < 8, an incomplete beta integral; 0 for kappa <= 4
    Interval,
    /// Schramm's left-passage probability for the point e^(i theta)
    Leftpass,
    /// Swallowing of the ring C(1 - r; r/2) together with 1; one sample uses
    /// the ring's top point, whose exact probability comes from the Schwarz-Christoffel triangle
    SwallowRing,
    /// Curve from 0 to 1 reaching C(0; R): 1 - (1 - 1/R^2)^(5/8) at kappa = 8/3, read two ways
    Diameter,
    /// Fitted exponent of P{curve meets C(1; r)} against the predicted 8/kappa - 1
    ExponentFit,
    /// Every comparison with an exact value at this kappa; exit 4 unless all are covered
    OracleSuite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Runs a Monte Carlo experiment and compares it with the exact value.
/// Exit status 4 means a confidence interval missed its exact value.
#[derive(Args)]
pub struct ExperimentArgs {
    kind: Option<Kind>,
    #[arg(long, help = KAPPA_HELP)]
    kappa: Option<String>,
    /// trials per experiment
    #[arg(long)]
    n: Option<u64>,
    /// capacity time step
    #[arg(long)]
    dt: Option<f64>,
    /// capacity horizon (default depends on kappa and probe)
    #[arg(long)]
    horizon: Option<f64>,
    /// master seed; falls back to the config file, SLE_LAB_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// probe size; for exponent-fit a comma-separated list
    #[arg(long, value_delimiter = ',')]
    r: Vec<f64>,
    /// angle for leftpass; accepts forms like pi/3
    #[arg(long, value_parser = parse_angle)]
    theta: Option<f64>,
    #[arg(long = "big-r")]
    big_r: Option<f64>,
    /// points sampled on the ring
    #[arg(long)]
    samples: Option<usize>,
    /// worker threads (0 = all cores); results do not depend on it
    #[arg(long)]
    workers: Option<usize>,
    /// confidence level of the reported intervals
    #[arg(long)]
    level: Option<f64>,
    /// JSON config file with schema_version; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
enum KappaValue {
    Number(f64),
    Text(String),
    #[default]
    Missing,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema_version: u32,
    kind: Option<Kind>,
    #[serde(default)]
    kappa: KappaValue,
    n: Option<u64>,
    dt: Option<f64>,
    horizon: Option<f64>,
    seed: Option<u64>,
    #[serde(default)]
    r: Vec<f64>,
    theta: Option<f64>,
    big_r: Option<f64>,
    samples: Option<usize>,
    workers: Option<usize>,
    level: Option<f64>,
}

fn load(path: &PathBuf) -> Result<ConfigFile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let file: ConfigFile =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Failure::Usage(format!(
            "{}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
            path.display(),
            file.schema_version
        )));
    }
    Ok(file)
}

/// Flags merged over the config file.
struct Settings {
    kind: Kind,
    params: SleParams,
    n: u64,
    dt: Option<f64>,
    horizon: Option<f64>,
    seed: u64,
    r: Vec<f64>,
    theta: f64,
    big_r: f64,
    samples: usize,
    workers: usize,
    level: f64,
}

fn settle(args: &ExperimentArgs) -> Result<Settings, Failure> {
    let file = match &args.config {
        Some(p) => Some(load(p)?),
        None => None,
    };
    let file_ref = file.as_ref();
    let kind = args
        .kind
        .or(file_ref.and_then(|f| f.kind))
        .ok_or_else(|| Failure::Usage("no experiment kind given".into()))?;
    let kappa_text = match (&args.kappa, file_ref.map(|f| &f.kappa)) {
        (Some(k), _) => k.clone(),
        (None, Some(KappaValue::Number(x))) => x.to_string(),
        (None, Some(KappaValue::Text(t))) => t.clone(),
        _ => return Err(Failure::Usage("--kappa is required".into())),
    };
    let params = parse_kappa(&kappa_text).map_err(Failure::Usage)?;
    let r = if !args.r.is_empty() { args.r.clone() } else { file_ref.map(|f| f.r.clone()).unwrap_or_default() };
    let pick = |flag: Option<f64>, from_file: Option<f64>| flag.or(from_file);
    let default_level = if kind == Kind::OracleSuite || kind == Kind::ExponentFit { 0.99 } else { 0.95 };
    Ok(Settings {
        kind,
        params,
        n: args.n.or(file_ref.and_then(|f| f.n)).unwrap_or(1000),
        dt: pick(args.dt, file_ref.and_then(|f| f.dt)),
        horizon: pick(args.horizon, file_ref.and_then(|f| f.horizon)),
        seed: resolve_seed(args.seed, file_ref.and_then(|f| f.seed))?,
        r,
        theta: pick(args.theta, file_ref.and_then(|f| f.theta)).unwrap_or(PI / 2.0),
        big_r: pick(args.big_r, file_ref.and_then(|f| f.big_r)).unwrap_or(4.0),
        samples: args.samples.or(file_ref.and_then(|f| f.samples)).unwrap_or(64),
        workers: args.workers.or(file_ref.and_then(|f| f.workers)).unwrap_or(0),
        level: pick(args.level, file_ref.and_then(|f| f.level)).unwrap_or(default_level),
    })
}

impl Settings {
    fn single_r(&self, default: f64) -> Result<f64, Failure> {
        match self.r.as_slice() {
            [] => Ok(default),
            [r] => Ok(*r),
            _ => Err(Failure::Usage("this experiment takes a single --r".into())),
        }
    }

    fn battery(&self) -> Battery {
        Battery {
            params: self.params,
            n_trials: self.n,
            seed: self.seed,
            workers: self.workers,
            level: self.level,
            dt: self.dt,
            horizon: self.horizon,
        }
    }

    fn probe(&self) -> Result<Probe, Failure> {
        Ok(match self.kind {
            Kind::Semicircle => Probe::semicircle(self.single_r(0.25)?),
            Kind::Interval => Probe::interval(self.single_r(0.1)?),
            Kind::Leftpass => Probe::LeftPassage { theta: self.theta, modulus: 1.0 },
            Kind::SwallowRing if self.samples == 1 => Probe::together_top(self.single_r(0.2)?),
            Kind::SwallowRing => Probe::Ring { r: self.single_r(0.2)? },
            Kind::Diameter => Probe::Diameter { big_r: self.big_r },
            Kind::ExponentFit | Kind::OracleSuite => unreachable!("batteries have no single probe"),
        })
    }

    fn single(&self) -> Result<Report, Failure> {
        let mut config = ExperimentConfig::new(self.params, self.probe()?, self.n, self.seed);
        config.n_ring_samples = self.samples;
        config.level = self.level;
        if let Some(dt) = self.dt {
            config.dt = dt;
        }
        if let Some(h) = self.horizon {
            config.horizon = h;
        }
        config.validate()?;
        let result = run_experiment(&config, self.workers)?;
        let row = OracleRow::new(self.kind_label(), &result, self.level)?;
        Ok(Report { rows: vec![row], results: vec![result], fit: None })
    }

    fn kind_label(&self) -> &'static str {
        match self.kind {
            Kind::Semicircle => "semicircle",
            Kind::Interval => "interval",
            Kind::Leftpass => "leftpass",
            Kind::SwallowRing => "swallow_ring",
            Kind::Diameter => "diameter",
            Kind::ExponentFit => "exponent_fit",
            Kind::OracleSuite => "oracle_suite",
        }
    }
}

fn summarize(report: &Report) -> String {
    let mut s = String::new();
    for row in &report.rows {
        s.push_str(&format!(
            "{:<18} {:<28} p_hat = {:.5} [{:.5}, {:.5}]",
            row.experiment_id, row.probe, row.p_hat, row.ci_low, row.ci_high
        ));
        if let (Some(p), Some(c)) = (row.oracle, row.covered) {
            s.push_str(&format!("  exact = {p:.5} {}", if c { "covered" } else { "MISSED" }));
        }
        s.push('\n');
    }
    s
}

pub fn run(args: ExperimentArgs) -> Result<(), Failure> {
    let settings = settle(&args)?;
    let battery = settings.battery();
    let report = match settings.kind {
        Kind::OracleSuite => oracle_suite(&battery)?,
        Kind::ExponentFit => {
            let radii = if settings.r.is_empty() { FIT_RADII.to_vec() } else { settings.r.clone() };
            exponent_fit(&battery, &radii)?
        }
        _ => settings.single()?,
    };

    let emit = |w: &mut dyn Write| -> Result<(), Failure> {
        match args.format {
            Format::Csv => write_csv(&report.rows, w)?,
            Format::Json => write_json(&report, &mut *w)?,
        }
        Ok(())
    };
    match &args.out {
        Some(path) => write_atomically(path, emit)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit(&mut lock)?;
            lock.flush().map_err(|e| Failure::Io(e.to_string()))?;
        }
    }
    eprint!("{}", summarize(&report));

    if let Some(fit) = &report.fit {
        let target = target_exponent(&settings.params);
        let off = (fit.slope - target).abs() / fit.slope_stderr;
        eprintln!(
            "slope = {:.4} +- {:.4}, predicted {:.4}, off by {:.2} stderr",
            fit.slope, fit.slope_stderr, target, off
        );
        if off > 2.0 {
            return Err(Failure::Coverage(format!("fitted slope is {off:.2} stderr from {target:.4}")));
        }
        return Ok(());
    }
    if !report.all_covered() {
        let missed: Vec<_> =
            report.rows.iter().filter(|r| r.covered == Some(false)).map(|r| r.experiment_id.as_str()).collect();
        return Err(Failure::Coverage(format!("exact value outside the interval for {}", missed.join(", "))));
    }
    Ok(())
}
