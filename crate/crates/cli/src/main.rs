mod exact_cmd;
mod experiment_cmd;
mod output;
mod trace_cmd;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sle_lab::{SleError, SleParams};

#[derive(Parser)]
#[command(name = "sle-lab", version, about = "Exact hitting probabilities and Monte Carlo for chordal SLE")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate closed-form and quadrature probabilities
    Exact(exact_cmd::ExactArgs),
    /// Simulate one trace and write it as CSV
    Trace(trace_cmd::TraceArgs),
    /// Run Monte Carlo experiments and compare with exact values
    Experiment(experiment_cmd::ExperimentArgs),
}

/// Why a command stopped; each kind has its own exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
    Io(String),
    Coverage(String),
}

impl From<SleError> for Failure {
    fn from(e: SleError) -> Self {
        match e {
            SleError::Domain(_) | SleError::Regime(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Coverage(_) => 4,
        }
    }
}

/// Parses kappa as a decimal or a fraction such as `8/3`.
pub fn parse_kappa(s: &str) -> Result<SleParams, String> {
    sle_lab::params::parse_kappa(s)
        .and_then(SleParams::new)
        .map_err(|e| e.to_string())
}

/// Parses an angle as a decimal or a multiple of pi such as `pi/2` or `2pi/3`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    let Some(at) = t.find("pi") else {
        return t.parse().map_err(|_| format!("not an angle: {s:?}"));
    };
    let bad = || format!("not an angle: {s:?}");
    let coef = t[..at].trim().trim_end_matches('*').trim();
    let coef: f64 = if coef.is_empty() { 1.0 } else { coef.parse().map_err(|_| bad())? };
    let rest = t[at + 2..].trim();
    let den: f64 = match rest.strip_prefix('/') {
        Some(d) => d.trim().parse().map_err(|_| bad())?,
        None if rest.is_empty() => 1.0,
        None => return Err(bad()),
    };
    Ok(coef * std::f64::consts::PI / den)
}

/// Seed from the flag, else the config file, else SLE_LAB_SEED, else 0.
pub fn resolve_seed(flag: Option<u64>, from_file: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag.or(from_file) {
        return Ok(s);
    }
    match std::env::var("SLE_LAB_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| Failure::Usage(format!("SLE_LAB_SEED is not a seed: {v:?}"))),
        Err(_) => Ok(0),
    }
}

pub const KAPPA_HELP: &str = "kappa in (0, 8), decimal or fraction like 8/3; kappa <= 4 gives simple curves, 4 < kappa < 8 curves that swallow regions";

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Exact(args) => exact_cmd::run(args),
        Command::Trace(args) => trace_cmd::run(args),
        Command::Experiment(args) => experiment_cmd::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Numerical(m) | Failure::Io(m) | Failure::Coverage(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_fractions() {
        assert_eq!(parse_kappa("8/3").unwrap().kappa(), 8.0 / 3.0);
        assert_eq!(parse_kappa("6").unwrap().kappa(), 6.0);
        assert!(parse_kappa("8").is_err());
        assert!(parse_kappa("1/x").is_err());
    }

    #[test]
    fn angles() {
        use std::f64::consts::PI;
        assert_eq!(parse_angle("pi/2").unwrap(), PI / 2.0);
        assert_eq!(parse_angle("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("2*pi/3").unwrap(), 2.0 * PI / 3.0);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert!(parse_angle("pi/").is_err());
        assert!(parse_angle("pie").is_err());
    }
}
