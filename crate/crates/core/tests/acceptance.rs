//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass criterion numbers to run a subset.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use sle_lab::exact;
use sle_lab::maps::{restriction_map_phi_derivative_at_0, restriction_map_phi_derivative_complex_step, HalfDisk};
use sle_lab::mc::{
    exponent_fit, oracle_suite, run_experiment, target_exponent, write_csv, write_json, Battery, ExperimentConfig,
    HitEstimate, Probe, FIT_RADII, LEFT_PASSAGE_ANGLES,
};
use sle_lab::numerics::{ln_beta, regularized_incomplete_beta, Quadrature};
use sle_lab::SleParams;

const SEED: u64 = 7;
const LEVEL: f64 = 0.99;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn listing(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join("; ")
    }
}

fn kappa(k: f64) -> SleParams {
    SleParams::new(k).unwrap()
}

fn config(params: SleParams, probe: Probe, n: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(params, probe, n, SEED);
    c.level = LEVEL;
    c
}

fn ci(e: &HitEstimate) -> String {
    format!("{}/{} = {:.5} [{:.5}, {:.5}]", e.hits, e.trials, e.p_hat, e.ci_low, e.ci_high)
}

fn identities() -> Verdict {
    let start = Instant::now();
    let quad = Quadrature::default();
    let mut worst_phi: f64 = 0.0;
    for &x in &[0.5, 1.0, 7.0] {
        for &r in &[0.05, 0.25, 1.0 / 3.0, 0.9] {
            let probe = HalfDisk::with_ratio(x, r).unwrap();
            let analytic = restriction_map_phi_derivative_at_0(&probe);
            worst_phi = worst_phi
                .max((restriction_map_phi_derivative_complex_step(&probe) - analytic).abs())
                .max((analytic - (1.0 - r * r)).abs());
        }
    }
    // the far vertex: F(1) by quadrature plus the tail, which maps onto a beta integral
    let mut worst_vertex: f64 = 0.0;
    for &a in &[0.26, 0.3, 1.0 / 3.0, 0.4, 0.49] {
        let p = SleParams::from_a(a).unwrap();
        let f1 = exact::sc_map_f(Complex64::new(1.0, 0.0), &p, &quad).unwrap();
        let (ct, _) = exact::swallow_bound_constants(&p).unwrap();
        let tail = ln_beta(1.0 - 2.0 * a, 4.0 * a - 1.0).unwrap().exp();
        let far = f1 + Complex64::from_polar(ct * tail, -PI * (4.0 * a - 2.0));
        worst_vertex = worst_vertex
            .max(((far - 1.0).norm() - 1.0).abs())
            .max((far.norm() - 2.0 * ((1.0 - 2.0 * a) * PI).cos()).abs());
    }
    let mut worst_beta: f64 = 0.0;
    for &a in &[0.26, 0.3, 1.0 / 3.0, 0.4, 0.45] {
        let p = SleParams::from_a(a).unwrap();
        for &r in &[0.01, 0.1, 0.2, 1.0 / 3.0, 0.6] {
            let direct = exact::interval_hit_probability(r, &p, &quad).unwrap();
            let beta = regularized_incomplete_beta(2.0 * r / (1.0 + r), 4.0 * a - 1.0, 1.0 - 2.0 * a).unwrap();
            worst_beta = worst_beta.max((direct - beta).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst_phi < 1e-10 && worst_vertex < 1e-9 && worst_beta < 1e-10 && secs < 5.0,
        format!("map derivative {worst_phi:.1e}, far vertex {worst_vertex:.1e}, incomplete beta {worst_beta:.1e}, {secs:.2} s"),
    )
}

fn flagship() -> Verdict {
    let exact = exact::semicircle_hit_exact_83(0.25).unwrap();
    let mut c = config(kappa(8.0 / 3.0), Probe::semicircle(0.25), 20_000);
    c.horizon = 25.0;
    let main = run_experiment(&c, 0).unwrap().estimate;
    c.dt /= 4.0;
    c.n_trials = 5000;
    let fine = run_experiment(&c, 0).unwrap().estimate;
    let inside = main.ci_low <= fine.p_hat && fine.p_hat <= main.ci_high;
    verdict(
        main.covers(exact) && inside,
        format!("exact {exact:.5}; dt {}, {}; dt/4 p_hat {:.5}", 2.5e-5, ci(&main), fine.p_hat),
    )
}

fn left_passage() -> Verdict {
    let quad = Quadrature::default();
    let mut missed = Vec::new();
    let mut worst: f64 = 0.0;
    for k in [2.0, 8.0 / 3.0, 6.0] {
        let p = kappa(k);
        for theta in LEFT_PASSAGE_ANGLES {
            let exact = exact::left_passage_probability(theta, &p, &quad).unwrap();
            if k == 8.0 / 3.0 {
                assert!((exact - (1.0 - theta.cos()) / 2.0).abs() < 1e-12);
            }
            let e = run_experiment(&config(p, Probe::LeftPassage { theta, modulus: 1.0 }, 5000), 0).unwrap().estimate;
            worst = worst.max(e.z_score(exact).abs());
            if !e.covers(exact) {
                missed.push(format!("kappa {k:.3} theta {theta:.4}: {} vs {exact:.5}", ci(&e)));
            }
        }
    }
    verdict(missed.is_empty(), format!("12 cells, largest |z| {worst:.2}, missed: {}", listing(&missed)))
}

fn exponents() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [6.0, 8.0 / 3.0] {
        let p = kappa(k);
        let mut battery = Battery::new(p, 20_000, SEED);
        battery.level = LEVEL;
        let report = exponent_fit(&battery, &FIT_RADII).unwrap();
        let fit = report.fit.unwrap();
        let target = target_exponent(&p);
        let off = (fit.slope - target).abs() / fit.slope_stderr;
        pass &= off <= 2.0;
        let points: Vec<String> = report
            .rows
            .iter()
            .map(|row| format!("r {:.3}: {:.5} vs {:.5}", row.r, row.p_hat, row.oracle.unwrap_or(f64::NAN)))
            .collect();
        parts.push(format!(
            "kappa {k:.3}: slope {:.4} +- {:.4} vs {target:.4} ({off:.2} stderr) [{}]",
            fit.slope,
            fit.slope_stderr,
            points.join(", ")
        ));
    }
    verdict(pass, parts.join("; "))
}

fn swallow_together() -> Verdict {
    let p = kappa(6.0);
    let quad = Quadrature::default();
    let r = 0.2;
    let z = Complex64::new(1.0 - r, r / 2.0);
    let exact = exact::swallow_split(z, &p, &quad).unwrap().p_same;
    let e = run_experiment(&config(p, Probe::together_top(r), 3000), 0).unwrap().estimate;

    let (_, c_dbl) = exact::swallow_bound_constants(&p).unwrap();
    let mut chain_breaks = 0;
    for ring in [0.05f64, 0.1, 0.2, 1.0 / 3.0] {
        let bound = 1.0 - c_dbl * ring.powf(4.0 * p.a() - 1.0);
        for k in 0..64 {
            let w = Complex64::new(1.0 - ring, 0.0) + Complex64::from_polar(ring / 2.0, PI * (k as f64 + 0.5) / 64.0);
            let f = exact::sc_map_f(w, &p, &quad).unwrap();
            let same = exact::swallow_split(w, &p, &quad).unwrap().p_same;
            let tol = 1e-12;
            if !(same <= f.re + tol && f.re <= f.norm() + tol && f.norm() <= bound + tol) {
                chain_breaks += 1;
            }
        }
    }
    verdict(
        e.covers(exact) && chain_breaks == 0,
        format!("p_same {exact:.5}, {} ({} undecided); inequality chain broken at {chain_breaks}/256", ci(&e), e.discarded),
    )
}

fn diameter() -> Verdict {
    let exact = exact::diameter_hit_exact_83(4.0).unwrap();
    let mut c = config(kappa(8.0 / 3.0), Probe::Diameter { big_r: 4.0 }, 1000);
    c.horizon = 25.0;
    let result = run_experiment(&c, 0).unwrap();
    let agree = result.coupling_agreement.unwrap();
    verdict(
        agree >= 0.98 && result.estimate.covers(exact),
        format!("agreement {:.1}%, exact {exact:.5}, {}", 100.0 * agree, ci(&result.estimate)),
    )
}

fn suite_bytes(k: f64, workers: usize) -> Vec<u8> {
    let mut battery = Battery::new(kappa(k), 200, SEED);
    battery.workers = workers;
    let report = oracle_suite(&battery).unwrap();
    let mut out = Vec::new();
    write_csv(&report.rows, &mut out).unwrap();
    write_json(&report, &mut out).unwrap();
    out
}

fn determinism() -> Verdict {
    let mut differing = Vec::new();
    let mut total = 0;
    for k in [8.0 / 3.0, 6.0, 2.0] {
        let first = suite_bytes(k, 1);
        total += first.len();
        if suite_bytes(k, 1) != first {
            differing.push(format!("kappa {k:.3} rerun"));
        }
        if suite_bytes(k, 4) != first {
            differing.push(format!("kappa {k:.3} with 4 workers"));
        }
    }
    verdict(differing.is_empty(), format!("{total} bytes compared, differing: {}", listing(&differing)))
}

fn interval_contrast() -> Verdict {
    let simple = run_experiment(&config(kappa(2.0), Probe::interval(0.1), 500), 0).unwrap().estimate;
    let p = kappa(6.0);
    let exact = exact::interval_hit_probability(0.1, &p, &Quadrature::default()).unwrap();
    let result = run_experiment(&config(p, Probe::interval(0.1), 5000), 0).unwrap();
    let gap = (result.split_rate.unwrap() - result.touched_rate.unwrap()).abs();
    verdict(
        simple.hits == 0 && result.estimate.covers(exact) && gap < 0.02,
        format!(
            "kappa 2: {}/{}; kappa 6: exact {exact:.5}, {}, sub-condition gap {gap:.4}",
            simple.hits,
            simple.trials,
            ci(&result.estimate)
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("exact identities", identities),
        ("kappa 8/3 semicircle", flagship),
        ("left passage", left_passage),
        ("exponent recovery", exponents),
        ("swallow together", swallow_together),
        ("diameter coupling", diameter),
        ("determinism", determinism),
        ("interval regimes", interval_contrast),
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let number = k + 1;
        if !wanted.is_empty() && !wanted.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        failed += !v.pass as usize;
        println!(
            "criterion {number} ({name}): {} in {:.1} s | {}",
            if v.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
