//! Explicit conformal maps: the half-disk uniformizer, the Mobius reduction
//! for curves between two boundary points, and the vertical slit maps that
//! make up the discrete Loewner flow.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, SleError};

/// Distance below which a point counts as sitting on a pole or slit.
pub const SINGULAR_GUARD: f64 = 1e-12;

/// D(x; eps): open half disk centred on the positive real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfDisk {
    center: f64,
    radius: f64,
}

impl HalfDisk {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(center > 0.0 && radius > 0.0 && radius < center) {
            return domain(format!("half disk needs 0 < radius < center, got center {center}, radius {radius}"));
        }
        Ok(Self { center, radius })
    }

    /// D(x; rx)
    pub fn with_ratio(center: f64, r: f64) -> Result<Self> {
        Self::new(center, r * center)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn ratio(&self) -> f64 {
        self.radius / self.center
    }
}

/// C(x; eps) = { x + eps e^{i theta} : 0 < theta < pi }.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Semicircle {
    pub center: f64,
    pub radius: f64,
}

impl Semicircle {
    pub fn new(center: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && center.is_finite() && radius.is_finite()) {
            return domain(format!("semicircle needs a positive radius, got {radius}"));
        }
        Ok(Self { center, radius })
    }

    pub fn point(&self, theta: f64) -> Complex64 {
        Complex64::new(self.center, 0.0) + Complex64::from_polar(self.radius, theta)
    }
}

/// Phi(z) = z + r^2 x^2 / (z - x) + r^2 x, mapping H minus D(x; rx) onto H
/// with Phi(0) = 0 and Phi(z) - z -> r^2 x at infinity.
pub fn restriction_map_phi(z: Complex64, probe: &HalfDisk) -> Result<Complex64> {
    let x = probe.center;
    let eps = probe.radius;
    let offset = z - x;
    if z.im >= 0.0 && offset.norm() < eps * (1.0 - SINGULAR_GUARD) {
        return domain("point lies inside the removed half disk");
    }
    Ok(phi_unchecked(z, x, eps))
}

fn phi_unchecked(z: Complex64, x: f64, eps: f64) -> Complex64 {
    z + eps * eps / (z - x) + eps * eps / x
}

/// Phi'(0) = 1 - r^2.
pub fn restriction_map_phi_derivative_at_0(probe: &HalfDisk) -> f64 {
    let r = probe.ratio();
    1.0 - r * r
}

/// Derivative of a map that is real on the real axis, by a 1e-20 complex step.
pub fn complex_step_derivative(f: impl Fn(Complex64) -> Complex64, x: f64) -> f64 {
    const STEP: f64 = 1e-20;
    f(Complex64::new(x, STEP)).im / STEP
}

/// Phi'(0) by complex-step differentiation of the explicit map.
pub fn restriction_map_phi_derivative_complex_step(probe: &HalfDisk) -> f64 {
    complex_step_derivative(|z| phi_unchecked(z, probe.center, probe.radius), 0.0)
}

/// h(z) = (R^2 - 1) / R^2 * z / (x - z): H onto H, h(0) = 0, h(x) = infinity,
/// carrying C(0; Rx) onto C(-1; 1/R). With the reciprocal prefactor
/// R^2 / (R^2 - 1) the image circle would be C(-R^4/(R^2-1)^2; R^3/(R^2-1)^2),
/// the same circle up to scaling.
pub fn mobius_h(z: Complex64, x: f64, big_r: f64) -> Result<Complex64> {
    check_mobius(x, big_r)?;
    let gap = Complex64::new(x, 0.0) - z;
    if gap.norm() < SINGULAR_GUARD * x.max(1.0) {
        return Err(SleError::Pole(format!("h has its pole at z = x = {x}")));
    }
    Ok(mobius_scale(big_r) * z / gap)
}

/// Inverse of `mobius_h`: z = x w / (w + (R^2 - 1) / R^2).
pub fn mobius_h_inverse(w: Complex64, x: f64, big_r: f64) -> Result<Complex64> {
    check_mobius(x, big_r)?;
    let c = mobius_scale(big_r);
    let denom = w + c;
    if denom.norm() < SINGULAR_GUARD {
        return Err(SleError::Pole(format!("h^-1 has its pole at w = {}", -c)));
    }
    Ok(x * w / denom)
}

fn mobius_scale(big_r: f64) -> f64 {
    (big_r * big_r - 1.0) / (big_r * big_r)
}

fn check_mobius(x: f64, big_r: f64) -> Result<()> {
    if !(x > 0.0) {
        return domain(format!("endpoint x must be positive, got {x}"));
    }
    if !(big_r >= 3.0) {
        return domain(format!("R must be at least 3, got {big_r}"));
    }
    Ok(())
}

/// Modulus without the overflow guard of `hypot`; callers stay far from
/// the overflow range.
#[inline]
pub(crate) fn modulus(z: Complex64) -> f64 {
    let m = (z.re * z.re + z.im * z.im).sqrt();
    if m.is_finite() && m > 1e-150 {
        m
    } else {
        z.norm()
    }
}

/// Principal square root computed algebraically.
#[inline]
pub(crate) fn principal_sqrt(z: Complex64) -> Complex64 {
    let m = modulus(z);
    if m == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    if z.re >= 0.0 {
        let t = (0.5 * (m + z.re)).sqrt();
        Complex64::new(t, z.im / (2.0 * t))
    } else {
        let t = (0.5 * (m - z.re)).sqrt();
        Complex64::new(z.im.abs() / (2.0 * t), t.copysign(z.im))
    }
}

/// Forward slit map z -> sqrt(z^2 + 4 dcap), removing [0, 2i sqrt(dcap)],
/// with the root taken in the closed upper half plane on the side of z.
#[inline]
pub(crate) fn slit_forward(z: Complex64, dcap: f64) -> Complex64 {
    let s = principal_sqrt(Complex64::new(z.re * z.re - z.im * z.im + 4.0 * dcap, 2.0 * z.re * z.im));
    if s.im < 0.0 || (s.im == 0.0 && z.re < 0.0) {
        -s
    } else {
        s
    }
}

/// Inverse slit map w -> sqrt(w^2 - 4 dcap), Im >= 0 on the closed half plane.
#[inline]
pub(crate) fn slit_inverse(w: Complex64, dcap: f64) -> Complex64 {
    if w.re == 0.0 && w.im == 0.0 {
        return Complex64::new(0.0, 2.0 * dcap.sqrt());
    }
    let ratio = (4.0 * dcap) / (w * w);
    let s = w * principal_sqrt(Complex64::new(1.0, 0.0) - ratio);
    // on the real segment |w| < 2 sqrt(dcap) the square root lands on the slit
    if s.im < 0.0 {
        -s
    } else {
        s
    }
}

/// Checked forward vertical slit map with zero driver.
pub fn vertical_slit_map(z: Complex64, dcap: f64) -> Result<Complex64> {
    if !(dcap > 0.0) {
        return domain("slit capacity must be positive");
    }
    if z.im < 0.0 {
        return domain("slit map acts on the closed upper half plane");
    }
    let height = 2.0 * dcap.sqrt();
    if z.re.abs() < SINGULAR_GUARD && z.im < height - SINGULAR_GUARD {
        return domain("point lies on the slit");
    }
    Ok(slit_forward(z, dcap))
}

/// Checked inverse vertical slit map with zero driver.
pub fn vertical_slit_map_inverse(w: Complex64, dcap: f64) -> Result<Complex64> {
    if !(dcap > 0.0) {
        return domain("slit capacity must be positive");
    }
    if w.im < 0.0 {
        return domain("inverse slit map acts on the closed upper half plane");
    }
    let z = slit_inverse(w, dcap);
    if z.im < 0.0 {
        return Err(SleError::Numerical(format!("inverse slit map left the half plane at w = {w}")));
    }
    Ok(z)
}
