//! Closed-form and quadrature-backed hitting probabilities.
//!
//! These are the exact oracles the Monte Carlo experiments are checked
//! against. Everything here is a pure function of its arguments.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SleError};
use crate::numerics::{gamma_ratio, integrate_endpoint_power, regularized_incomplete_beta, integrate_line, integrate_segment_split, Quadrature};
use crate::params::SleParams;

/// Restriction exponent for kappa = 8/3.
pub const RESTRICTION_EXPONENT: f64 = 5.0 / 8.0;

/// Third vertex of the Schwarz-Christoffel triangle, with its checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleVertexData {
    pub vertex: Complex64,
    /// (1 - 2a) pi
    pub interior_angle_factor: f64,
    /// |vertex - 1|, equal to 1 for the isosceles triangle
    pub side_check: f64,
}

/// Order in which z and the boundary point 1 are swallowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwallowSplit {
    /// P{T_z < T_1}
    pub p_before: f64,
    /// P{T_z = T_1}
    pub p_same: f64,
    /// P{T_z > T_1}
    pub p_after: f64,
}

/// P{curve meets C(x; rx)} for kappa = 8/3, i.e. 1 - (1 - r^2)^(5/8).
pub fn semicircle_hit_exact_83(r: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return domain(format!("semicircle ratio r must lie in [0, 1), got {r}"));
    }
    // -expm1 keeps full relative accuracy as r -> 0.
    Ok(-(RESTRICTION_EXPONENT * (-r * r).ln_1p()).exp_m1())
}

/// P{curve meets C(x; rx)} for kappa = 6.
///
/// By locality the curve meets the semicircle iff, run in H minus the half
/// disk, it lands on the semicircle before the real line right of it.
/// z + r^2/(z - 1) + r^2 uniformizes that domain (x = 1) and sends the
/// semicircle onto [(1 - r)^2, (1 + r)^2], leaving an interval-hit
/// probability: 1 - I_{u^2}(1/3, 1/3) with u = (1 - r)/(1 + r).
pub fn semicircle_hit_exact_6(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return domain(format!("semicircle ratio r must lie in (0, 1), got {r}"));
    }
    let u = (1.0 - r) / (1.0 + r);
    Ok(1.0 - regularized_incomplete_beta(u * u, 1.0 / 3.0, 1.0 / 3.0)?)
}

/// P{curve avoids A} = Phi_A'(0)^(5/8) for kappa = 8/3.
pub fn restriction_probability(map_derivative_at_0: f64) -> Result<f64> {
    let d = map_derivative_at_0;
    if !(d > 0.0 && d <= 1.0) {
        return domain(format!("map derivative at 0 must lie in (0, 1], got {d}"));
    }
    Ok(d.powf(RESTRICTION_EXPONENT))
}

/// P{curve meets C(0; Rx)} for the curve from 0 to x, kappa = 8/3.
pub fn diameter_hit_exact_83(big_r: f64) -> Result<f64> {
    if !(big_r >= 3.0) {
        return domain(format!("diameter ratio R must be at least 3, got {big_r}"));
    }
    if big_r.is_infinite() {
        return Ok(0.0);
    }
    semicircle_hit_exact_83(1.0 / big_r)
}

/// Gamma(2a) / (Gamma(1 - 2a) Gamma(4a - 1)) = 1 / B(1 - 2a, 4a - 1).
fn c_tilde(params: &SleParams) -> Result<f64> {
    let a = params.a();
    gamma_ratio(&[2.0 * a], &[1.0 - 2.0 * a, 4.0 * a - 1.0])
}

/// P{curve meets [x - rx, x + rx]} for 4 < kappa < 8.
///
/// Evaluated by quadrature of c~ * int_0^{2r/(1+r)} t^(4a-2) (1-t)^(-2a) dt; the
/// incomplete beta function is the independent second route.
pub fn interval_hit_probability(r: f64, params: &SleParams, quad: &Quadrature) -> Result<f64> {
    params.require_touching("interval hitting")?;
    if !(r > 0.0 && r < 1.0) {
        return domain(format!("interval ratio r must lie in (0, 1), got {r}"));
    }
    let a = params.a();
    let upper = 2.0 * r / (1.0 + r);
    // 1 - upper, kept exact for r close to 1
    let gap = (1.0 - r) / (1.0 + r);
    let integral = if r <= 0.5 {
        integrate_endpoint_power(|t| (1.0 - t).powf(-2.0 * a), 4.0 * a - 2.0, 0.0, upper, quad)?
    } else {
        // both ends matter: split at 1/2 and let the upper piece see 1 - t exactly
        let low = integrate_endpoint_power(|t| (1.0 - t).powf(-2.0 * a), 4.0 * a - 2.0, 0.0, 0.5, quad)?;
        let high = integrate_segment_split(|t, _, to_upper| t.powf(4.0 * a - 2.0) * (gap + to_upper).powf(-2.0 * a), 0.5, upper, quad)?;
        crate::numerics::QuadEstimate { value: low.value + high.value, error: low.error + high.error, level: low.level.max(high.level) }
    };
    Ok((c_tilde(params)? * integral.value).clamp(0.0, 1.0))
}

/// int_0^theta sin(alpha)^e d alpha for theta <= pi/2.
fn sine_power_integral(theta: f64, exponent: f64, quad: &Quadrature) -> Result<f64> {
    // sin^e = alpha^e (sin(alpha)/alpha)^e
    let smooth = |alpha: f64| if alpha == 0.0 { 1.0 } else { (alpha.sin() / alpha).powf(exponent) };
    Ok(integrate_endpoint_power(smooth, exponent, 0.0, theta, quad)?.value)
}

/// Schramm's formula: probability that rho e^{i theta} lies left of the curve.
pub fn left_passage_probability(theta: f64, params: &SleParams, quad: &Quadrature) -> Result<f64> {
    if !(theta > 0.0 && theta < PI) {
        return domain(format!("theta must lie in (0, pi), got {theta}"));
    }
    let exponent = 4.0 * params.a() - 2.0;
    let half_total = sine_power_integral(FRAC_PI_2, exponent, quad)?;
    let value = if theta <= FRAC_PI_2 {
        sine_power_integral(theta, exponent, quad)? / (2.0 * half_total)
    } else {
        1.0 - sine_power_integral(PI - theta, exponent, quad)? / (2.0 * half_total)
    };
    Ok(value)
}

/// Explicit lower-bound constant c_a for kappa <= 4:
/// pi^(4a-1) / (4^(6a-1) (4a-1) int_0^pi sin^(4a-2)).
pub fn lower_bound_constant_simple(params: &SleParams, quad: &Quadrature) -> Result<f64> {
    params.require_simple("the explicit left-passage lower bound")?;
    let a = params.a();
    let total = 2.0 * sine_power_integral(FRAC_PI_2, 4.0 * a - 2.0, quad)?;
    Ok(PI.powf(4.0 * a - 1.0) / (4f64.powf(6.0 * a - 1.0) * (4.0 * a - 1.0) * total))
}

/// Two-sided ball estimate kernel (eps / Im z)^(1 - 1/(4a)) (Im z / |z|)^(4a - 1).
/// Not a probability: the true hitting probability is comparable up to constants.
pub fn beffara_kernel(z: Complex64, eps: f64, params: &SleParams) -> Result<f64> {
    if !(z.im > 0.0) {
        return domain("ball centre must lie in the open upper half plane");
    }
    if !(eps > 0.0 && eps <= z.im / 2.0) {
        return domain(format!("ball radius must lie in (0, Im z / 2], got {eps}"));
    }
    let a = params.a();
    Ok((eps / z.im).powf(1.0 - 1.0 / (4.0 * a)) * (z.im / z.norm()).powf(4.0 * a - 1.0))
}

/// (c~_a, c''_a) from the swallowing bound; c''_a = 2^(1-4a) c~_a / (4a - 1).
pub fn swallow_bound_constants(params: &SleParams) -> Result<(f64, f64)> {
    params.require_touching("swallowing constants")?;
    let a = params.a();
    let ct = c_tilde(params)?;
    Ok((ct, 2f64.powf(1.0 - 4.0 * a) * ct / (4.0 * a - 1.0)))
}

/// Principal power on the closed upper half plane.
fn upper_pow(z: Complex64, p: f64) -> Complex64 {
    Complex64::from_polar(z.norm().powf(p), p * z.im.atan2(z.re))
}

/// Power of 1 - zeta for zeta in the closed upper half plane: arg(1 - zeta)
/// lies in [-pi, 0], and right of 1 on the real axis the limit from above
/// (-pi) is used.
fn lower_pow(one_minus_zeta: Complex64, p: f64) -> Complex64 {
    let arg = if one_minus_zeta.im == 0.0 && one_minus_zeta.re < 0.0 {
        -PI
    } else {
        one_minus_zeta.im.atan2(one_minus_zeta.re)
    };
    Complex64::from_polar(one_minus_zeta.norm().powf(p), p * arg)
}

/// zeta^(-2a) (1 - zeta)^(4a-2), with (1 - zeta) supplied separately so it
/// stays accurate near 1.
fn sc_integrand(zeta: Complex64, one_minus_zeta: Complex64, a: f64) -> Complex64 {
    upper_pow(zeta, -2.0 * a) * lower_pow(one_minus_zeta, 4.0 * a - 2.0)
}

/// Unnormalized int_0^w zeta^(-2a) (1 - zeta)^(4a-2) d zeta.
fn sc_integral(w: Complex64, a: f64, quad: &Quadrature) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let one_minus_w = one - w;
    // closest approach of the ray to 1, as a fraction of the ray
    let s_star = w.re / w.norm_sqr();
    let ray_ok = s_star >= 1.0 || s_star <= 0.0 || (w.im.abs() / w.norm()) >= 0.25 * one_minus_w.norm();
    if !ray_ok {
        // bend through 1: int_0^1 + int_1^w, zeta = 1 + sigma (w - 1)
        let to_one = sc_integral(one, a, quad)?;
        let w_minus_one = w - one;
        let scale = lower_pow(-w_minus_one, 4.0 * a - 2.0) * w_minus_one;
        let leg = integrate_endpoint_power(
            |sigma| upper_pow(one + w_minus_one * sigma, -2.0 * a) * scale,
            4.0 * a - 2.0,
            0.0,
            1.0,
            quad,
        )?;
        return Ok(to_one + leg.value);
    }
    // zeta = s w; first half carries the s^(-2a) singularity exactly
    let w_factor = upper_pow(w, 1.0 - 2.0 * a);
    let near_zero = integrate_endpoint_power(
        |s| lower_pow(one_minus_w + w * (1.0 - s), 4.0 * a - 2.0) * w_factor,
        -2.0 * a,
        0.0,
        0.5,
        quad,
    )?;
    let near_w = if one_minus_w.norm() == 0.0 {
        // d = 1 - s carries the (1 - zeta)^(4a-2) singularity at zeta = 1
        integrate_endpoint_power(
            |d| Complex64::new((1.0 - d).powf(-2.0 * a), 0.0),
            4.0 * a - 2.0,
            0.0,
            0.5,
            quad,
        )?
        .value
    } else {
        integrate_line(|zeta, _, to_w| sc_integrand(zeta, one_minus_w + w * (0.5 * to_w), a), w * 0.5, w, quad)?.value
    };
    Ok(near_zero.value + near_w)
}

/// Schwarz-Christoffel map of H onto the triangle with vertices 0, 1, F(inf):
/// F(w) = c~_a int_0^w zeta^(-2a) (1 - zeta)^(4a-2) d zeta.
///
/// Integrates along the straight ray 0 -> w. When that ray would pass close
/// to the singular point 1 (only possible for Re w > 1) the path is bent
/// through 1 instead: F(w) = F(1) + int_1^w.
pub fn sc_map_f(w: Complex64, params: &SleParams, quad: &Quadrature) -> Result<Complex64> {
    params.require_touching("the Schwarz-Christoffel map")?;
    if w.im < 0.0 || !w.re.is_finite() || !w.im.is_finite() {
        return domain("F is defined on the closed upper half plane");
    }
    if w.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(sc_integral(w, params.a(), quad)? * c_tilde(params)?)
}

/// F(inf) = Gamma(2a)Gamma(1-2a) / (Gamma(2-4a)Gamma(4a-1)) e^{(1-2a) pi i}.
pub fn sc_vertex(params: &SleParams) -> Result<TriangleVertexData> {
    params.require_touching("the triangle vertex")?;
    let a = params.a();
    let modulus = gamma_ratio(&[2.0 * a, 1.0 - 2.0 * a], &[2.0 - 4.0 * a, 4.0 * a - 1.0])?;
    let angle = (1.0 - 2.0 * a) * PI;
    let vertex = Complex64::from_polar(modulus, angle);
    Ok(TriangleVertexData { vertex, interior_angle_factor: angle, side_check: (vertex - 1.0).norm() })
}

const SPLIT_SLACK: f64 = 1e-9;
const SPLIT_FAIL: f64 = 1e-6;

/// Barycentric coordinates of F(z) in the triangle (0, 1, F(inf)) give the
/// swallowing-order probabilities of z relative to 1.
pub fn swallow_split(z: Complex64, params: &SleParams, quad: &Quadrature) -> Result<SwallowSplit> {
    params.require_touching("swallow ordering")?;
    if z.im < 0.0 {
        return domain("z must lie in the closed upper half plane");
    }
    if z.norm() == 0.0 || (z - 1.0).norm() == 0.0 {
        return domain("z must differ from 0 and 1");
    }
    let f = sc_map_f(z, params, quad)?;
    let vertex = sc_vertex(params)?.vertex;
    let p_after = f.im / vertex.im;
    let p_same = f.re - vertex.re * p_after;
    let p_before = 1.0 - p_same - p_after;
    let check = |name: &str, v: f64| -> Result<f64> {
        if v < -SPLIT_FAIL || v > 1.0 + SPLIT_FAIL {
            return Err(SleError::Numerical(format!("swallow split component {name} = {v} outside [0, 1]")));
        }
        if v < -SPLIT_SLACK || v > 1.0 + SPLIT_SLACK {
            // between the slack and the failure threshold: still clamp, but
            // it means the quadrature is near its tolerance
            return Ok(v.clamp(0.0, 1.0));
        }
        Ok(v.clamp(0.0, 1.0))
    };
    Ok(SwallowSplit {
        p_before: check("p_before", p_before)?,
        p_same: check("p_same", p_same)?,
        p_after: check("p_after", p_after)?,
    })
}
