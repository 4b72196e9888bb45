use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SleError};

/// Tolerances for the double-exponential (tanh-sinh) rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_refinement_level: u32,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { abs_tol: 1e-11, rel_tol: 1e-10, max_refinement_level: 12 }
    }
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64, max_refinement_level: u32) -> Result<Self> {
        if !(abs_tol > 0.0 && rel_tol > 0.0) {
            return domain("quadrature tolerances must be positive");
        }
        if max_refinement_level < 4 {
            return domain("quadrature needs at least 4 refinement levels");
        }
        Ok(Self { abs_tol, rel_tol, max_refinement_level })
    }
}

/// Scalars the rule can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
    fn parts(self) -> (f64, f64);
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        // componentwise bound
        self.re.abs().max(self.im.abs())
    }
    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadEstimate<T> {
    pub value: T,
    pub error: f64,
    pub level: u32,
}

// Abscissae beyond this overflow the distance-to-endpoint into subnormals.
const T_MAX: f64 = 6.5;
const H0: f64 = 0.5;

/// Integrates `f` over [lo, hi]; `f` receives (x, x - lo, hi - x) with both
/// distances accurate even where x itself rounds onto an endpoint.
pub fn integrate_segment_split<T, F>(mut f: F, lo: f64, hi: f64, quad: &Quadrature) -> Result<QuadEstimate<T>>
where
    T: QuadValue,
    F: FnMut(f64, f64, f64) -> T,
{
    if !(lo.is_finite() && hi.is_finite()) {
        return domain("integration limits must be finite");
    }
    if lo == hi {
        return Ok(QuadEstimate { value: T::zero(), error: 0.0, level: 0 });
    }
    if hi < lo {
        let est = tanh_sinh(&mut |x, dlo, dhi| f(x, dhi, dlo), hi, lo, quad)?;
        return Ok(QuadEstimate { value: est.value * -1.0, ..est });
    }
    tanh_sinh(&mut f, lo, hi, quad)
}

fn tanh_sinh<T: QuadValue>(f: &mut dyn FnMut(f64, f64, f64) -> T, lo: f64, hi: f64, quad: &Quadrature) -> Result<QuadEstimate<T>> {
    let half = 0.5 * (hi - lo);
    let mut eval = |t: f64| -> T {
        let u = FRAC_PI_2 * t.sinh();
        let cosh_u = u.cosh();
        let weight = half * FRAC_PI_2 * t.cosh() / (cosh_u * cosh_u);
        if weight == 0.0 || !weight.is_finite() {
            return T::zero();
        }
        // distance from the endpoint that t is approaching
        let near = 2.0 * half / (1.0 + (2.0 * u.abs()).exp());
        if near == 0.0 {
            return T::zero();
        }
        let far = 2.0 * half - near;
        let (dlo, dhi) = if t > 0.0 { (far, near) } else { (near, far) };
        let x = if dlo <= dhi { lo + dlo } else { hi - dhi };
        f(x, dlo, dhi) * weight
    };

    let mut h = H0;
    let mut sum = eval(0.0);
    let n0 = (T_MAX / h) as i64;
    for k in 1..=n0 {
        let t = k as f64 * h;
        sum = sum + eval(t) + eval(-t);
    }
    let mut estimate = sum * h;
    let mut error = f64::INFINITY;
    for level in 1..=quad.max_refinement_level {
        h *= 0.5;
        let n = (T_MAX / h) as i64;
        let mut k = 1;
        while k <= n {
            let t = k as f64 * h;
            sum = sum + eval(t) + eval(-t);
            k += 2;
        }
        let next = sum * h;
        error = (next - estimate).magnitude();
        estimate = next;
        let scale = estimate.magnitude();
        if level >= 3 && (error <= quad.abs_tol || error <= quad.rel_tol * scale) {
            return Ok(QuadEstimate { value: estimate, error, level });
        }
        let (re, im) = estimate.parts();
        if !(re.is_finite() && im.is_finite()) {
            break;
        }
    }
    let (estimate_re, estimate_im) = estimate.parts();
    Err(SleError::NoConvergence { estimate_re, estimate_im, error })
}

/// int_lo^hi (x - lo)^exponent g(x) dx for exponent > -1, with the power
/// factored out analytically: substituting x - lo = v^(1/(exponent+1)) leaves
/// a smooth integrand even when the exponent is close to -1, where plain
/// tanh-sinh runs out of representable distances to the endpoint.
pub fn integrate_endpoint_power<T, G>(g: G, exponent: f64, lo: f64, hi: f64, quad: &Quadrature) -> Result<QuadEstimate<T>>
where
    T: QuadValue,
    G: Fn(f64) -> T,
{
    if !(exponent > -1.0) {
        return domain(format!("endpoint exponent must exceed -1, got {exponent}"));
    }
    if !(hi >= lo) {
        return domain("endpoint-power integral needs lo <= hi");
    }
    let p = exponent + 1.0;
    let top = (hi - lo).powf(p);
    let est = integrate_segment_split(|v, _, _| g(lo + v.powf(1.0 / p)), 0.0, top, quad)?;
    Ok(QuadEstimate { value: est.value * (1.0 / p), ..est })
}

/// Integrates a real function over [lo, hi].
pub fn integrate_segment<F>(f: F, lo: f64, hi: f64, quad: &Quadrature) -> Result<QuadEstimate<f64>>
where
    F: Fn(f64) -> f64,
{
    integrate_segment_split(|x, _, _| f(x), lo, hi, quad)
}

/// Line integral of `g` along the straight segment from `from` to `to`.
/// `g` receives (zeta, fraction travelled, fraction remaining).
pub fn integrate_line<G>(g: G, from: Complex64, to: Complex64, quad: &Quadrature) -> Result<QuadEstimate<Complex64>>
where
    G: Fn(Complex64, f64, f64) -> Complex64,
{
    let delta = to - from;
    integrate_segment_split(
        |_, ds_from, ds_to| {
            let zeta = if ds_from <= ds_to { from + delta * ds_from } else { to - delta * ds_to };
            g(zeta, ds_from, ds_to) * delta
        },
        0.0,
        1.0,
        quad,
    )
    .map(|e| QuadEstimate { value: e.value, error: e.error, level: e.level })
}

/// Line integral of `g` from 0 to `endpoint` along the straight ray.
pub fn integrate_ray<G>(g: G, endpoint: Complex64, quad: &Quadrature) -> Result<QuadEstimate<Complex64>>
where
    G: Fn(Complex64) -> Complex64,
{
    integrate_line(|zeta, _, _| g(zeta), Complex64::new(0.0, 0.0), endpoint, quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn sine_and_sqrt_singularity() {
        let v = integrate_segment(f64::sin, 0.0, PI, &q()).unwrap().value;
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate_segment(|t| t.powf(-0.5), 0.0, 1.0, &q()).unwrap().value;
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn reversed_and_empty_limits() {
        let v = integrate_segment(|x| x, 1.0, 0.0, &q()).unwrap().value;
        assert!((v + 0.5).abs() < 1e-14);
        assert_eq!(integrate_segment(|x| x, 2.0, 2.0, &q()).unwrap().value, 0.0);
    }

    #[test]
    fn polynomials_exact() {
        let coeffs = [0.3, -1.2, 2.5, 0.7, -0.4, 1.1, -0.9];
        let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let anti = |x: f64| coeffs.iter().enumerate().map(|(k, c)| c * x.powi(k as i32 + 1) / (k as f64 + 1.0)).sum::<f64>();
        for &(lo, hi) in &[(0.0, 1.0), (-2.0, 3.0), (1.5, 1.75)] {
            let v = integrate_segment(poly, lo, hi, &q()).unwrap().value;
            let exact = anti(hi) - anti(lo);
            assert!((v - exact).abs() < 1e-12 * exact.abs().max(1.0), "{lo}..{hi}");
        }
    }

    /// Brute midpoint refinement with Richardson-free halving; slow but
    /// independent of the tanh-sinh nodes.
    fn midpoint(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        (0..n).map(|k| f(lo + (k as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn sine_power_against_midpoint_oracle() {
        // a = 0.4: exponent 4a - 2 = -0.4, integrable at both ends; by symmetry
        // integrate over [0, pi/2] where the only singular end is 0.
        let e = -0.4;
        let f = |x: f64| x.sin().powf(e);
        let ours = 2.0 * integrate_segment(f, 0.0, PI / 2.0, &q()).unwrap().value;
        // midpoint error for x^-0.4 singularities is O(h^0.6); extrapolate from
        // two refinements to cancel the leading term.
        let m1 = 2.0 * midpoint(f, 0.0, PI / 2.0, 1 << 20);
        let m2 = 2.0 * midpoint(f, 0.0, PI / 2.0, 1 << 21);
        let ratio = 2f64.powf(0.6);
        let extrapolated = (ratio * m2 - m1) / (ratio - 1.0);
        assert!((ours - extrapolated).abs() < 1e-6, "{ours} vs {extrapolated}");
        // and against the beta identity: int_0^pi sin^(2z-1) = B(z, 1/2)
        let z = (e + 1.0) / 2.0;
        let beta = crate::numerics::ln_beta(z, 0.5).unwrap().exp();
        assert!((ours - beta).abs() < 1e-10);
    }

    #[test]
    fn ray_integrals() {
        let i = Complex64::new(0.0, 1.0);
        let v = integrate_ray(|_| Complex64::new(1.0, 0.0), i, &q()).unwrap().value;
        assert!((v - i).norm() < 1e-13);
        let v = integrate_ray(|z| z, Complex64::new(1.0, 1.0), &q()).unwrap().value;
        assert!((v - i).norm() < 1e-12);
        let v = integrate_ray(|z| z.powf(-0.7), Complex64::new(1.0, 0.0), &q()).unwrap().value;
        assert!((v.re - 1.0 / 0.3).abs() < 1e-9 && v.im.abs() < 1e-12);
    }

    #[test]
    fn ray_matches_parametrized_segment() {
        let w = Complex64::new(0.6, 0.8);
        let g = |z: Complex64| (z * z).exp() + z.powf(-0.3);
        let ray = integrate_ray(g, w, &q()).unwrap().value;
        let re = integrate_segment(|s| (g(w * s) * w).re, 0.0, 1.0, &q()).unwrap().value;
        let im = integrate_segment(|s| (g(w * s) * w).im, 0.0, 1.0, &q()).unwrap().value;
        assert!((ray.re - re).abs() < 1e-10 && (ray.im - im).abs() < 1e-10);
    }

    #[test]
    fn endpoint_power_near_minus_one() {
        // int_0^1 x^-0.98 (1 + x) dx = 1/0.02 + 1/1.02
        let v: f64 = integrate_endpoint_power(|x| 1.0 + x, -0.98, 0.0, 1.0, &q()).unwrap().value;
        assert!((v - (50.0 + 1.0 / 1.02)).abs() < 1e-9, "{v}");
        assert!(integrate_endpoint_power(|x: f64| x, -1.0, 0.0, 1.0, &q()).is_err());
    }

    #[test]
    fn reports_non_convergence() {
        let tight = Quadrature::new(1e-300, 1e-300, 4).unwrap();
        match integrate_segment(|x| (1.0 / x).sin(), 0.0, 1.0, &tight) {
            Err(SleError::NoConvergence { estimate_re, .. }) => assert!(estimate_re.is_finite()),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_tolerances() {
        assert!(Quadrature::new(0.0, 1e-3, 8).is_err());
        assert!(Quadrature::new(1e-3, 1e-3, 3).is_err());
    }
}
