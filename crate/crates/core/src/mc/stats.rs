//! Binomial intervals and the power-law fit.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};

/// Tally of one experiment with its Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitEstimate {
    pub hits: u64,
    /// decided trials; the denominator of `p_hat`
    pub trials: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// trials left undecided at the horizon or lost to a numerical failure
    pub discarded: u64,
    pub level: f64,
}

/// Two-sided standard normal quantile for confidence `level`.
pub fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return domain(format!("confidence level must lie in (0, 1), got {level}"));
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf(0.5 + 0.5 * level))
}

impl HitEstimate {
    pub fn wilson(hits: u64, trials: u64, discarded: u64, level: f64) -> Result<Self> {
        if hits > trials {
            return domain(format!("{hits} hits out of {trials} trials"));
        }
        let z = normal_quantile(level)?;
        let (p_hat, ci_low, ci_high) = if trials == 0 {
            (0.0, 0.0, 1.0)
        } else {
            let n = trials as f64;
            let p = hits as f64 / n;
            let z2 = z * z;
            let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
            let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
            // the endpoints are exact at p = 0 and p = 1; clamp away rounding
            let lo = if hits == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
            let hi = if hits == trials { 1.0 } else { (center + half).clamp(p, 1.0) };
            (p, lo, hi)
        };
        Ok(HitEstimate { hits, trials, p_hat, ci_low, ci_high, discarded, level })
    }

    pub fn covers(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }

    /// Same tally at another confidence level.
    pub fn at_level(&self, level: f64) -> Result<Self> {
        Self::wilson(self.hits, self.trials, self.discarded, level)
    }

    /// (p_hat - p) over the binomial standard error at `p`.
    pub fn z_score(&self, p: f64) -> f64 {
        let se = (p * (1.0 - p) / self.trials as f64).sqrt();
        if se > 0.0 {
            (self.p_hat - p) / se
        } else if self.p_hat == p {
            0.0
        } else {
            f64::INFINITY.copysign(self.p_hat - p)
        }
    }
}

/// Weighted least-squares fit of ln p against ln r.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub r_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// model standard error, inflated by the reduced chi-square when the
    /// points scatter more than their intervals allow
    pub slope_stderr: f64,
    pub chi2: f64,
}

/// Fits p ~ C r^slope. Weights come from the interval half-widths mapped
/// to log space.
pub fn fit_exponent(estimates: &[(f64, HitEstimate)]) -> Result<ExponentFit> {
    if estimates.len() < 4 {
        return domain(format!("need at least 4 probe sizes, got {}", estimates.len()));
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) || sorted.iter().any(|(r, _)| !(*r > 0.0)) {
        return domain("probe sizes must be positive and distinct");
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for (r, e) in &sorted {
        if !(e.p_hat > 0.0 && e.p_hat < 1.0) {
            return domain(format!("estimate at r = {r} is {}, outside (0, 1)", e.p_hat));
        }
        let z = normal_quantile(e.level)?;
        let sigma = 0.5 * (e.ci_high - e.ci_low) / z / e.p_hat;
        xs.push(r.ln());
        ys.push(e.p_hat.ln());
        ws.push(1.0 / (sigma * sigma));
    }
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).zip(&ws).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let chi2: f64 = xs
        .iter()
        .zip(&ys)
        .zip(&ws)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let dof = (xs.len() - 2) as f64;
    let slope_stderr = ((chi2 / dof).max(1.0) / sxx).sqrt();
    Ok(ExponentFit {
        r_values: sorted.iter().map(|(r, _)| *r).collect(),
        p_values: sorted.iter().map(|(_, e)| e.p_hat).collect(),
        slope,
        intercept,
        slope_stderr,
        chi2,
    })
}
