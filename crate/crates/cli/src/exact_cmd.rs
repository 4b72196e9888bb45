use clap::{Args, Subcommand};
use num_complex::Complex64;
use sle_lab::exact;
use sle_lab::numerics::Quadrature;
use sle_lab::SleParams;

use crate::{parse_angle, parse_kappa, Failure, KAPPA_HELP};

#[derive(Args)]
pub struct ExactArgs {
    #[command(subcommand)]
    which: Which,
}

#[derive(Subcommand)]
enum Which {
    /// Restriction formula for kappa = 8/3: P{curve meets C(1; r)} = 1 - (1 - r^2)^(5/8)
    Hit83 {
        #[arg(long)]
        r: f64,
    },
    /// Locality formula for kappa = 6: P{curve meets C(1; r)}
    Hit6 {
        #[arg(long)]
        r: f64,
    },
    /// Interval-hitting integral: P{curve lands in [1 - r, 1 + r]} for 4 < kappa < 8
    Interval {
        #[arg(long, value_parser = parse_kappa, help = KAPPA_HELP)]
        kappa: SleParams,
        #[arg(long)]
        r: f64,
    },
    /// Schramm's left-passage formula: P{e^(i theta) lies left of the curve}
    Leftpass {
        #[arg(long, value_parser = parse_kappa, help = KAPPA_HELP)]
        kappa: SleParams,
        /// angle in (0, pi); accepts forms like pi/3
        #[arg(long, value_parser = parse_angle)]
        theta: f64,
    },
    /// Swallowing order of z and 1 from the Schwarz-Christoffel triangle (4 < kappa < 8)
    SwallowSplit {
        #[arg(long, value_parser = parse_kappa, help = KAPPA_HELP)]
        kappa: SleParams,
        #[arg(long)]
        re: f64,
        #[arg(long)]
        im: f64,
    },
    /// Schwarz-Christoffel map of H onto the swallowing triangle at w
    ScMap {
        #[arg(long, value_parser = parse_kappa, help = KAPPA_HELP)]
        kappa: SleParams,
        #[arg(long)]
        re: f64,
        #[arg(long)]
        im: f64,
    },
    /// Constants of the swallowing bounds and the third triangle vertex (4 < kappa < 8)
    Constants {
        #[arg(long, value_parser = parse_kappa, help = KAPPA_HELP)]
        kappa: SleParams,
    },
    /// Restriction formula for the curve from 0 to 1 reaching C(0; R), kappa = 8/3
    Diameter83 {
        #[arg(long = "big-r")]
        big_r: f64,
    },
}

/// Twelve significant digits.
fn show(name: &str, value: f64) {
    let magnitude = if value == 0.0 { 0 } else { value.abs().log10().floor() as i32 };
    if (-5..12).contains(&magnitude) {
        let decimals = (11 - magnitude) as usize;
        println!("{name} = {value:.decimals$}");
    } else {
        println!("{name} = {value:.11e}");
    }
}

pub fn run(args: ExactArgs) -> Result<(), Failure> {
    let quad = Quadrature::default();
    match args.which {
        Which::Hit83 { r } => show("p", exact::semicircle_hit_exact_83(r)?),
        Which::Hit6 { r } => show("p", exact::semicircle_hit_exact_6(r)?),
        Which::Interval { kappa, r } => show("p", exact::interval_hit_probability(r, &kappa, &quad)?),
        Which::Leftpass { kappa, theta } => show("p", exact::left_passage_probability(theta, &kappa, &quad)?),
        Which::SwallowSplit { kappa, re, im } => {
            let s = exact::swallow_split(Complex64::new(re, im), &kappa, &quad)?;
            show("p_before", s.p_before);
            show("p_same", s.p_same);
            show("p_after", s.p_after);
        }
        Which::ScMap { kappa, re, im } => {
            let f = exact::sc_map_f(Complex64::new(re, im), &kappa, &quad)?;
            show("re", f.re);
            show("im", f.im);
        }
        Which::Constants { kappa } => {
            let (c_tilde, c_dbl) = exact::swallow_bound_constants(&kappa)?;
            let v = exact::sc_vertex(&kappa)?;
            show("c_tilde", c_tilde);
            show("c_double_prime", c_dbl);
            show("vertex_re", v.vertex.re);
            show("vertex_im", v.vertex.im);
            show("side", v.side_check);
            show("modulus", v.vertex.norm());
        }
        Which::Diameter83 { big_r } => show("p", exact::diameter_hit_exact_83(big_r)?),
    }
    Ok(())
}
