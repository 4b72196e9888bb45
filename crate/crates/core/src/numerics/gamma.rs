use crate::error::{domain, Result};

// Lanczos approximation, g = 7, nine terms (Godfrey's coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("ln_gamma needs a finite x > 0, got {x}"));
    }
    Ok(ln_gamma_positive(x))
}

pub(crate) fn ln_gamma_positive(x: f64) -> f64 {
    // Exact zeros at 1 and 2; the series loses relative accuracy next to them.
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x < 0.5 {
        // Shift up one step: Gamma(x) = Gamma(x + 1) / x.
        return lanczos(x + 1.0) - x.ln();
    }
    lanczos(x)
}

fn lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut sum = LANCZOS_COEFFS[0];
    for (k, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        sum += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (z + 0.5) * t.ln() - t + sum.ln()
}

/// prod Gamma(num) / prod Gamma(den), all arguments positive.
pub fn gamma_ratio(num: &[f64], den: &[f64]) -> Result<f64> {
    let mut log = 0.0;
    for &x in num {
        log += ln_gamma(x)?;
    }
    for &x in den {
        log -= ln_gamma(x)?;
    }
    Ok(log.exp())
}
