use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use sle_lab::sim::{compute_trace, sample_driver, write_driver_csv};
use sle_lab::SleParams;

use crate::output::write_atomically;
use crate::{parse_kappa, resolve_seed, Failure, KAPPA_HELP};

/// Exact trace reconstruction costs O(n^2) in the step count.
const MAX_STEPS: f64 = 2e5;

/// Reconstructs the Loewner trace driven by sqrt(kappa) B_t, one point per
/// driver step, by composing vertical-slit maps (half-plane capacity 2t).
#[derive(Args)]
pub struct TraceArgs {
    #[arg(long, value_parser = parse_kappa, help = KAPPA_HELP)]
    kappa: SleParams,
    /// capacity time step
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    /// final capacity time
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    /// master seed; falls back to SLE_LAB_SEED, then 0
    #[arg(long)]
    seed: Option<u64>,
    /// trial index within the seed's stream family
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// trace CSV (trial_id, step, capacity_time, re, im)
    #[arg(long)]
    out: PathBuf,
    /// driver CSV (trial_id, step, increment)
    #[arg(long)]
    driver_out: Option<PathBuf>,
    /// drive with W = 0, which must give a vertical segment
    #[arg(long)]
    zero_noise: bool,
}

pub fn run(args: TraceArgs) -> Result<(), Failure> {
    if args.horizon / args.dt > MAX_STEPS {
        return Err(Failure::Usage(format!(
            "horizon / dt = {:.0} exceeds the {MAX_STEPS:.0} step limit for exact traces",
            args.horizon / args.dt
        )));
    }
    let start = Instant::now();
    let seed = resolve_seed(args.seed, None)?;
    let mut driver = sample_driver(&args.kappa, args.dt, args.horizon, seed, args.trial)?;
    if args.zero_noise {
        driver = driver.zero_noise();
    }
    let trace = compute_trace(&driver)?;
    write_atomically(&args.out, |w| Ok(trace.write_csv(args.trial, w)?))?;
    if let Some(path) = &args.driver_out {
        write_atomically(path, |w| Ok(write_driver_csv(&driver, w)?))?;
    }
    println!(
        "points = {}, max |gamma| = {:.6}, runtime = {:.3} s",
        trace.len(),
        trace.max_modulus(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
