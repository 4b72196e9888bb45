//! Flow-based event detectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::driver::DriverPath;
use super::flow::{distance_to_range, run, tip_point, Control, Particle, Step, StepPolicy, Tracker};
use super::{IntervalConditions, TrialOutcome};
use crate::error::{domain, Result};
use crate::maps::{modulus, Semicircle};
use crate::params::{Regime, SleParams};

/// Default swallow threshold for a capacity step `dt`: the slit height scale.
pub fn default_swallow_eps(dt: f64) -> f64 {
    2.0 * (2.0 * dt).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub z_current: Complex64,
    pub swallowed: bool,
    pub swallow_time: Option<f64>,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return domain(format!("swallow threshold must be positive, got {eps}"));
    }
    Ok(())
}

fn outcome_base(driver: &DriverPath, steps: &[Step]) -> TrialOutcome {
    TrialOutcome {
        resolution: driver.dt(),
        horizon: driver.horizon(),
        steps: steps.len(),
        ..TrialOutcome::default()
    }
}

/// Points flowed together; stops when `stop_on` (if any) is swallowed.
struct Points {
    particles: Vec<Particle>,
    eps: f64,
    stop_on: Option<usize>,
    w: f64,
}

impl Points {
    fn new(particles: Vec<Particle>, eps: f64, stop_on: Option<usize>) -> Self {
        Points { particles, eps, stop_on, w: 0.0 }
    }
}

/// A real image is swallowed only when the driver passes it, which can
/// happen inside any step it sits close to; steps shrink until none does.
fn reals_settled(particles: &[Particle], w: f64, near: f64) -> bool {
    particles.iter().all(|p| !p.active() || p.z.im > 0.0 || (p.z.re - w).abs() >= near)
}

impl Tracker for Points {
    fn is_clear(&mut self, _: &[Step], lo: f64, hi: f64, need: f64) -> Result<bool> {
        Ok(all_clear(&self.particles, lo, hi, need))
    }

    fn settled(&self, eps_scale: f64) -> bool {
        reals_settled(&self.particles, self.w, SETTLE_RATIO * self.eps * eps_scale)
    }

    fn advance(&mut self, _: &[Step], step: &Step) -> Result<Control> {
        self.w = step.w_end;
        for p in &mut self.particles {
            p.advance(step, self.eps)?;
        }
        let done = match self.stop_on {
            Some(k) => !self.particles[k].active(),
            None => self.particles.iter().all(|p| !p.active()),
        };
        Ok(if done { Control::Stop } else { Control::Continue })
    }
}

fn all_clear(particles: &[Particle], lo: f64, hi: f64, need: f64) -> bool {
    particles.iter().filter(|p| p.active()).all(|p| distance_to_range(p.z, lo, hi) >= need)
}

/// Flows `z0` until it is swallowed or the driver ends.
pub fn flow_point(z0: Complex64, driver: &DriverPath, swallow_eps: f64) -> Result<FlowState> {
    flow_point_with(z0, driver, swallow_eps, StepPolicy::default())
}

pub fn flow_point_with(z0: Complex64, driver: &DriverPath, swallow_eps: f64, policy: StepPolicy) -> Result<FlowState> {
    check_eps(swallow_eps)?;
    if !(z0.im >= 0.0) || z0 == Complex64::new(0.0, 0.0) {
        return domain(format!("start point must lie in the closed upper half plane minus 0, got {z0}"));
    }
    let mut t = Points::new(vec![Particle::new(z0)], swallow_eps, Some(0));
    run(driver, policy, &mut t)?;
    let p = t.particles[0];
    Ok(FlowState { z_current: p.z, swallowed: !p.active(), swallow_time: p.swallowed_at })
}

/// Images of a semicircle probe, refined where they approach the driver.
struct Crosscut {
    probe: Semicircle,
    /// (angle, image), sorted by angle; the ends are the real base points
    samples: Vec<(f64, Particle)>,
    eps: f64,
    /// a sample inserted by replay turned out to be swallowed already
    late_swallow: bool,
    /// largest distance from the driver to the probe image after the last step
    spread: f64,
    result: Option<Resolution>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Resolution {
    Hit(f64),
    Enclosed(f64),
}

const CROSSCUT_START: usize = 16;
const CROSSCUT_MAX: usize = 20_000;
const CROSSCUT_SPACING: f64 = 0.5;
/// A first swallow with the whole probe image within this many thresholds
/// of the driver is a loop closing around the probe.
const ENCLOSURE_RATIO: f64 = 10.0;
const PRUNE_MARGIN: f64 = 0.25;
/// Past the refinement floor, steps keep shrinking until the probe image is
/// this many swallow thresholds across.
const SETTLE_RATIO: f64 = 100.0;
/// Relative size below which a surviving probe image counts as collapsed.
const COLLAPSE_RATIO: f64 = 1e-6;
const PRUNE_ABOVE: usize = 40;

impl Crosscut {
    fn new(probe: Semicircle, eps: f64) -> Self {
        let samples = (0..=CROSSCUT_START)
            .map(|j| {
                let theta = PI * j as f64 / CROSSCUT_START as f64;
                let z = if j == 0 {
                    Complex64::new(probe.center + probe.radius, 0.0)
                } else if j == CROSSCUT_START {
                    Complex64::new(probe.center - probe.radius, 0.0)
                } else {
                    probe.point(theta)
                };
                (theta, Particle::new(z))
            })
            .collect();
        Crosscut { probe, samples, eps, late_swallow: false, spread: f64::INFINITY, result: None }
    }

    /// The image has shrunk to a sliver far from the driver, so the rest of
    /// the curve can only close around it.
    fn collapsed(&self, w: f64) -> bool {
        self.samples.iter().all(|(_, p)| p.active()) && collapsed(self.samples.iter().map(|(_, p)| p.z), w)
    }

    fn start(&self, theta: f64) -> Complex64 {
        self.probe.point(theta)
    }

    fn insert(&mut self, i: usize, history: &[Step], current: Option<&Step>) -> Result<()> {
        let theta = 0.5 * (self.samples[i].0 + self.samples[i + 1].0);
        let mut p = Particle::replay(self.start(theta), history, self.eps)?;
        if let Some(step) = current {
            p.advance(step, self.eps)?;
        }
        self.late_swallow |= !p.active();
        self.samples.insert(i + 1, (theta, p));
        Ok(())
    }

    /// Drops samples whose neighbours already resolve the image well at the
    /// current driver position, with a wide margin against re-insertion.
    fn prune(&mut self, w: f64, eps: f64) {
        let mut kept: Vec<(f64, Particle)> = Vec::with_capacity(self.samples.len());
        let last = self.samples.len() - 1;
        for i in 0..=last {
            if i == 0 || i == last {
                kept.push(self.samples[i]);
                continue;
            }
            let a = kept[kept.len() - 1].1.z;
            let b = self.samples[i + 1].1.z;
            let d = segment_to_range(a, b, w, w);
            let live = kept[kept.len() - 1].1.active() && self.samples[i].1.active() && self.samples[i + 1].1.active();
            let removable = live && modulus(b - a) < PRUNE_MARGIN * CROSSCUT_SPACING * d.max(eps);
            if !removable {
                kept.push(self.samples[i]);
            }
        }
        self.samples = kept;
    }

    /// Both ends of segment `i` are still outside the hull.
    fn live(&self, i: usize) -> bool {
        self.samples[i].1.active() && self.samples[i + 1].1.active()
    }

    fn splittable(&self, i: usize) -> bool {
        self.samples[i + 1].0 - self.samples[i].0 > 1e-13 && self.samples.len() < CROSSCUT_MAX
    }

    /// Inserts samples until every polyline segment is short compared with
    /// its distance to the driver position `w`.
    fn refine_at(&mut self, history: &[Step], current: &Step, w: f64) -> Result<()> {
        let eps = self.eps * current.eps_scale;
        let mut i = 0;
        while i + 1 < self.samples.len() {
            if !self.live(i) {
                i += 1;
                continue;
            }
            let (a, b) = (self.samples[i].1.z, self.samples[i + 1].1.z);
            // the lowest point of a segment is an endpoint, which bounds its distance from below
            let gap_x = (a.re.min(b.re) - w).max(w - a.re.max(b.re)).max(0.0);
            let bound = a.im.min(b.im).max(gap_x);
            let len = modulus(b - a);
            if len > CROSSCUT_SPACING * bound.max(eps) {
                let d = segment_to_range(a, b, w, w);
                if len > CROSSCUT_SPACING * d.max(eps) && self.splittable(i) {
                    self.insert(i, history, Some(current))?;
                    continue;
                }
            }
            i += 1;
        }
        Ok(())
    }
}
/// Distance between the segment `[a, b]` and the real interval `[lo, hi]`.
fn segment_to_range(a: Complex64, b: Complex64, lo: f64, hi: f64) -> f64 {
    // both lie in the closed upper half plane, so the segment meets the axis
    // only at an endpoint
    let mut d = distance_to_range(a, lo, hi).min(distance_to_range(b, lo, hi));
    for x in [lo, hi] {
        d = d.min(point_to_segment(Complex64::new(x, 0.0), a, b));
    }
    d
}

fn point_to_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return modulus(p - a);
    }
    let s = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    modulus(p - (a + ab * s.clamp(0.0, 1.0)))
}

impl Tracker for Crosscut {
    fn is_clear(&mut self, history: &[Step], lo: f64, hi: f64, need: f64) -> Result<bool> {
        if self.result.is_some() {
            return Ok(false);
        }
        let mut i = 0;
        while i + 1 < self.samples.len() {
            if !self.live(i) {
                let survivor = [&self.samples[i].1, &self.samples[i + 1].1].into_iter().find(|p| p.active());
                if survivor.is_some_and(|p| distance_to_range(p.z, lo, hi) < need) {
                    return Ok(false);
                }
                i += 1;
                continue;
            }
            let (a, b) = (self.samples[i].1.z, self.samples[i + 1].1.z);
            let gap_x = (a.re.min(b.re) - hi).max(lo - a.re.max(b.re)).max(0.0);
            let bound = a.im.min(b.im).max(gap_x);
            let len = modulus(b - a);
            if bound < need || len > CROSSCUT_SPACING * bound {
                let d = segment_to_range(a, b, lo, hi);
                if d < need {
                    return Ok(false);
                }
                // a long chord may hide a closer arc
                if len > CROSSCUT_SPACING * d && self.splittable(i) {
                    self.insert(i, history, None)?;
                    if self.late_swallow {
                        return Ok(false);
                    }
                    continue;
                }
            }
            i += 1;
        }
        Ok(true)
    }

    fn settled(&self, eps_scale: f64) -> bool {
        self.spread >= SETTLE_RATIO * self.eps * eps_scale
    }

    fn advance(&mut self, history: &[Step], step: &Step) -> Result<Control> {
        if self.result.is_some() {
            return Ok(Control::Stop);
        }
        let mut swallowed = std::mem::take(&mut self.late_swallow);
        for (_, p) in &mut self.samples {
            swallowed |= p.advance(step, self.eps)?;
        }
        if self.samples.len() > PRUNE_ABOVE && history.len() % 16 == 0 {
            self.prune(step.w_end, self.eps * step.eps_scale);
        }
        self.refine_at(history, step, step.w_end)?;
        swallowed |= std::mem::take(&mut self.late_swallow);
        self.spread = self.samples.iter().map(|(_, p)| modulus(p.z - step.w_end)).fold(0.0, f64::max);
        if swallowed {
            let enclosed = self.spread < ENCLOSURE_RATIO * self.eps * step.eps_scale;
            self.result = Some(if enclosed { Resolution::Enclosed(step.t_end) } else { Resolution::Hit(step.t_end) });
            return Ok(Control::Stop);
        }
        Ok(Control::Continue)
    }
}

/// Semicircle hit decided on the forward flow of the probe.
///
/// The probe's image is tracked as a polyline refined near the driver, and
/// steps keep shrinking near the first swallow until the image is either
/// clearly macroscopic or clearly collapsing. If the whole image is within a
/// few swallow thresholds of the driver when a point is swallowed, a loop has
/// closed around the half disk without touching it (possible for kappa > 4);
/// otherwise the curve hit it. A kappa > 4 image that has shrunk to a sliver
/// far from the driver by the horizon can only be enclosed later.
pub fn hit_semicircle_flow(
    driver: &DriverPath,
    probe: &Semicircle,
    swallow_eps: f64,
    policy: StepPolicy,
) -> Result<(TrialOutcome, Vec<Step>)> {
    check_eps(swallow_eps)?;
    if probe.radius >= probe.center.abs() {
        return domain("the probe disk must not contain the origin");
    }
    let mut t = Crosscut::new(*probe, swallow_eps);
    let steps = run(driver, policy, &mut t)?;

    let mut out = outcome_base(driver, &steps);
    match t.result {
        Some(Resolution::Hit(time)) => {
            out.event_hit = true;
            out.first_hit_time = Some(time);
        }
        Some(Resolution::Enclosed(_)) => out.enclosed = true,
        None => out.enclosed = driver.kappa() > 4.0 && t.collapsed(steps.last().map_or(0.0, |s| s.w_end)),
    }
    Ok((out, steps))
}

/// Interval hit by point swallowing.
///
/// The curve lands inside `[x_lo, x_hi]` exactly when `x_lo` is swallowed
/// while `x_hi` survives; landing further right swallows both at once. The
/// event needs that split and, as a geometric check, the reconstructed tip
/// at the swallow lying over the interval. Both are recorded.
pub fn hit_interval(driver: &DriverPath, x_lo: f64, x_hi: f64, swallow_eps: f64) -> Result<TrialOutcome> {
    hit_interval_with(driver, x_lo, x_hi, swallow_eps, StepPolicy::default())
}

pub fn hit_interval_with(
    driver: &DriverPath,
    x_lo: f64,
    x_hi: f64,
    swallow_eps: f64,
    policy: StepPolicy,
) -> Result<TrialOutcome> {
    check_eps(swallow_eps)?;
    if !(0.0 < x_lo && x_lo < x_hi) {
        return domain(format!("need 0 < x_lo < x_hi, got [{x_lo}, {x_hi}]"));
    }
    let ends = vec![Particle::new(Complex64::new(x_lo, 0.0)), Particle::new(Complex64::new(x_hi, 0.0))];
    let mut t = Points::new(ends, swallow_eps, Some(0));
    let steps = run(driver, policy, &mut t)?;
    let mut out = outcome_base(driver, &steps);
    let mut cond = IntervalConditions::default();
    if let Some(time) = t.particles[0].swallowed_at {
        cond.swallowed = true;
        cond.split = t.particles[1].active();
        let tip = tip_point(&steps, steps.len() - 1);
        cond.touched = distance_to_range(Complex64::new(tip.re, 0.0), x_lo, x_hi) <= tip.im;
        if cond.split && cond.touched {
            out.event_hit = true;
            out.first_hit_time = Some(time);
        }
    }
    out.interval = Some(cond);
    Ok(out)
}

/// Which side of the completed curve a point ends up on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Undecided,
}

/// Side of `z` read from `g(z) - W` when `z` is swallowed, or at the
/// horizon otherwise.
pub fn left_passage_side(driver: &DriverPath, z: Complex64, swallow_eps: f64) -> Result<Side> {
    check_eps(swallow_eps)?;
    if !(z.im > 0.0) {
        return domain(format!("left passage needs an interior point, got {z}"));
    }
    let mut t = Points::new(vec![Particle::new(z)], swallow_eps, Some(0));
    let steps = run(driver, StepPolicy::default(), &mut t)?;
    let p = t.particles[0];
    let offset = if p.active() { p.z - steps.last().map_or(0.0, |s| s.w_end) } else { p.approach };
    Ok(if offset.re.abs() < 0.01 * offset.norm() {
        Side::Undecided
    } else if offset.re < 0.0 {
        Side::Left
    } else {
        Side::Right
    })
}

/// `Some(true)` when `z` passes left of the curve, `None` when undecided.
pub fn left_passage_indicator(driver: &DriverPath, z: Complex64, swallow_eps: f64) -> Result<Option<bool>> {
    Ok(match left_passage_side(driver, z, swallow_eps)? {
        Side::Left => Some(true),
        Side::Right => Some(false),
        Side::Undecided => None,
    })
}

/// Default horizon for a left-passage run at `z`.
pub fn left_passage_horizon(z: Complex64, factor: f64) -> f64 {
    factor * z.norm_sqr().max(1.0)
}

/// Whether 1 and the tracked points all go at the first swallow among them.
struct Together {
    particles: Vec<Particle>,
    eps: f64,
    w: f64,
    verdict: Option<bool>,
}

impl Together {
    /// Every point is swallowed or within a few thresholds of the driver.
    fn gathered(&self, near: f64) -> bool {
        self.particles.iter().all(|p| !p.active() || modulus(p.z - self.w) < near)
    }
}

impl Tracker for Together {
    fn is_clear(&mut self, _: &[Step], lo: f64, hi: f64, need: f64) -> Result<bool> {
        Ok(all_clear(&self.particles, lo, hi, need))
    }

    fn settled(&self, eps_scale: f64) -> bool {
        let near = SETTLE_RATIO * self.eps * eps_scale;
        reals_settled(&self.particles, self.w, near) && !self.gathered(near)
    }

    fn advance(&mut self, _: &[Step], step: &Step) -> Result<Control> {
        self.w = step.w_end;
        let mut swallowed = false;
        for p in &mut self.particles {
            swallowed |= p.advance(step, self.eps)?;
        }
        if !swallowed {
            return Ok(Control::Continue);
        }
        self.verdict = Some(self.gathered(ENCLOSURE_RATIO * self.eps * step.eps_scale));
        Ok(Control::Stop)
    }
}

/// Whether every point of `points` is swallowed at the same time as the
/// point 1. `None` when nothing is swallowed by the horizon and the images
/// have not yet collapsed together.
pub fn swallow_together_points(driver: &DriverPath, points: &[Complex64], swallow_eps: f64) -> Result<Option<bool>> {
    check_eps(swallow_eps)?;
    if points.is_empty() || points.iter().any(|z| !(z.im >= 0.0)) {
        return domain("need at least one point in the closed upper half plane");
    }
    let mut particles = vec![Particle::new(Complex64::new(1.0, 0.0))];
    particles.extend(points.iter().map(|z| Particle::new(*z)));
    let mut t = Together { particles, eps: swallow_eps, w: 0.0, verdict: None };
    run(driver, StepPolicy::default(), &mut t)?;
    if t.verdict.is_none() && collapsed(t.particles.iter().map(|p| p.z), t.w) {
        return Ok(Some(true));
    }
    Ok(t.verdict)
}

/// The images have shrunk to a sliver far from the driver `w`.
fn collapsed(images: impl Iterator<Item = Complex64> + Clone, w: f64) -> bool {
    let Some(first) = images.clone().next() else {
        return false;
    };
    let size = images.clone().map(|z| modulus(z - first)).fold(0.0, f64::max);
    let gap = images.map(|z| modulus(z - w)).fold(f64::INFINITY, f64::min);
    size < COLLAPSE_RATIO * gap
}

/// `n_samples` points of the ring `C(1 - r; r/2)`, uniform in angle.
pub fn ring_points(r: f64, n_samples: usize) -> Vec<Complex64> {
    let probe = Semicircle { center: 1.0 - r, radius: 0.5 * r };
    (0..n_samples)
        .map(|j| probe.point(PI * (j as f64 + 0.5) / n_samples as f64))
        .collect()
}

/// Ring version of [`swallow_together_points`].
pub fn swallow_together(
    driver: &DriverPath,
    params: &SleParams,
    r: f64,
    n_samples: usize,
    swallow_eps: f64,
) -> Result<Option<bool>> {
    if !(r > 0.0 && r <= 1.0 / 3.0) {
        return domain(format!("ring parameter must lie in (0, 1/3], got {r}"));
    }
    if n_samples < 8 {
        return domain(format!("need at least 8 ring samples, got {n_samples}"));
    }
    if params.regime() != Regime::Touching {
        return domain("swallowing together needs 4 < kappa < 8");
    }
    swallow_together_points(driver, &ring_points(r, n_samples), swallow_eps)
}
