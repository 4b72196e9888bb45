//! Discrete Loewner flow by composition of vertical slit maps.
//!
//! Each step freezes the driver and applies `z -> w + sqrt((z - w)^2 + 4 dcap)`,
//! the exact solution of `dg/dt = 2 / (g - w)` with constant `w`. Under the
//! adaptive policy a whole dyadic block of the driver tree is applied as a
//! single slit when every tracked image is far from the driver over that block.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::driver::{node_level, DriverPath, NodeSampler, MAX_DEPTH};
use crate::error::{Result, SleError};
use crate::maps::{modulus, slit_forward, slit_inverse};

/// Capacity steps below this, relative to the squared driver magnitude,
/// would move images by less than double precision resolves.
const PRECISION_FLOOR: f64 = 1e-26;

/// One composed slit map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    /// capacity time at the end of the step
    pub t_end: f64,
    /// capacity increment (half-plane capacity grows by `2 * dcap`)
    pub dcap: f64,
    /// driver value used for the slit
    pub slit_at: f64,
    /// driver value before and after the step
    pub w_start: f64,
    pub w_end: f64,
    /// fine-step index at the end of the step, rounded down inside a fine step
    pub index: u128,
    /// swallow thresholds shrink by this factor on steps finer than `dt`
    pub eps_scale: f64,
}

impl Step {
    #[inline]
    pub fn forward(&self, z: Complex64) -> Complex64 {
        let shift = Complex64::new(self.slit_at, 0.0);
        shift + slit_forward(z - shift, self.dcap)
    }

    #[inline]
    pub fn inverse(&self, w: Complex64) -> Complex64 {
        let shift = Complex64::new(self.slit_at, 0.0);
        shift + slit_inverse(w - shift, self.dcap)
    }

    /// Tip of this step's slit in the plane before the step.
    pub fn tip(&self) -> Complex64 {
        Complex64::new(self.slit_at, 2.0 * self.dcap.sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepPolicy {
    /// one slit per fine driver step
    Uniform,
    /// merge a dyadic block when the tracked images keep a distance of at
    /// least `safety` times the block's own length scale; where they do not,
    /// split fine steps up to `sub_levels` more times
    Adaptive {
        safety: f64,
        #[serde(default = "default_sub_levels")]
        sub_levels: u32,
    },
}

fn default_sub_levels() -> u32 {
    40
}

impl StepPolicy {
    pub fn adaptive(safety: f64) -> Self {
        StepPolicy::Adaptive { safety, sub_levels: default_sub_levels() }
    }
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::adaptive(2.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Control {
    Continue,
    Stop,
}

/// Observer of the flow. Implementors hold the images of whatever they track.
pub(crate) trait Tracker {
    /// Whether every tracked image keeps a distance of at least `need` from
    /// the real interval `[lo, hi]`. May refine its own sampling by
    /// replaying `history`; a false negative only costs extra steps.
    fn is_clear(&mut self, history: &[Step], lo: f64, hi: f64, need: f64) -> Result<bool>;

    /// Push the images through `step`; `history` holds the earlier steps.
    fn advance(&mut self, history: &[Step], step: &Step) -> Result<Control>;

    /// Whether steps whose swallow threshold is scaled by `eps_scale` are
    /// fine enough once the policy's refinement floor is reached.
    fn settled(&self, _eps_scale: f64) -> bool {
        true
    }
}

/// Distance from `z` to the real interval `[lo, hi]`.
#[inline]
pub(crate) fn distance_to_range(z: Complex64, lo: f64, hi: f64) -> f64 {
    let dx = if z.re < lo {
        lo - z.re
    } else if z.re > hi {
        z.re - hi
    } else {
        0.0
    };
    (dx * dx + z.im * z.im).sqrt()
}

/// Runs the flow to the horizon or until the tracker stops it.
/// Returns the steps taken.
pub(crate) fn run<T: Tracker>(driver: &DriverPath, policy: StepPolicy, tracker: &mut T) -> Result<Vec<Step>> {
    if let StepPolicy::Adaptive { safety, .. } = policy {
        if !(safety > 0.0) {
            return Err(SleError::Domain(format!("adaptive safety factor must be positive, got {safety}")));
        }
    }
    let mut engine = Engine {
        driver,
        policy,
        nodes: driver.sampler(),
        history: Vec::new(),
        tracker,
    };
    let end = driver.root_end(&mut engine.nodes);
    engine.visit(1, 0.0, end)?;
    Ok(engine.history)
}

struct Engine<'a, T> {
    driver: &'a DriverPath,
    policy: StepPolicy,
    nodes: NodeSampler,
    history: Vec<Step>,
    tracker: &'a mut T,
}

impl<T: Tracker> Engine<'_, T> {
    fn visit(&mut self, node: u128, w_lo: f64, w_hi: f64) -> Result<Control> {
        let n = self.driver.n_steps();
        let depth = self.driver.depth();
        let level = node_level(node);
        let idx = node - (1u128 << level);
        // the block in fine-step units
        let (start, end) = if level <= depth {
            (idx << (depth - level), (idx + 1) << (depth - level))
        } else {
            (idx >> (level - depth), (idx + 1) >> (level - depth))
        };
        if start >= n {
            return Ok(Control::Continue);
        }
        let dcap = self.driver.level_time(level);
        match self.policy {
            StepPolicy::Uniform => {
                if level == depth {
                    return self.apply(end, dcap, w_hi, w_lo, w_hi);
                }
            }
            StepPolicy::Adaptive { safety, sub_levels } => {
                if end <= n || level > depth {
                    let (a, b) = if w_lo < w_hi { (w_lo, w_hi) } else { (w_hi, w_lo) };
                    // slit height, driver displacement and a margin for the bridge inside the block
                    let scale = 2.0 * dcap.sqrt() + (b - a) + 2.0 * (self.driver.kappa() * dcap).sqrt();
                    let floor = level >= MAX_DEPTH
                        || (level >= depth + sub_levels && self.tracker.settled(self.eps_scale(dcap)))
                        || dcap < PRECISION_FLOOR * (1.0 + b.abs().max(a.abs())).powi(2);
                    if floor || self.tracker.is_clear(&self.history, a, b, safety * scale)? {
                        return self.apply(end, dcap, 0.5 * (w_lo + w_hi), w_lo, w_hi);
                    }
                }
            }
        }
        let w_mid = self.driver.midpoint(&mut self.nodes, node, w_lo, w_hi);
        if self.visit(2 * node, w_lo, w_mid)? == Control::Stop {
            return Ok(Control::Stop);
        }
        self.visit(2 * node + 1, w_mid, w_hi)
    }

    fn eps_scale(&self, dcap: f64) -> f64 {
        (dcap / self.driver.dt()).sqrt().min(1.0)
    }

    fn apply(&mut self, index: u128, dcap: f64, slit_at: f64, w_start: f64, w_end: f64) -> Result<Control> {
        let t_end = self.history.last().map_or(0.0, |s| s.t_end) + dcap;
        let eps_scale = self.eps_scale(dcap);
        let step = Step { t_end, dcap, slit_at, w_start, w_end, index, eps_scale };
        let control = self.tracker.advance(&self.history, &step)?;
        self.history.push(step);
        Ok(control)
    }
}

/// Image of a single point under the flow, with swallow bookkeeping.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Particle {
    pub z: Complex64,
    /// `g - w` just before the swallowing step
    pub approach: Complex64,
    pub swallowed_at: Option<f64>,
}

impl Particle {
    pub fn new(z: Complex64) -> Self {
        Particle { z, approach: z, swallowed_at: None }
    }

    pub fn active(&self) -> bool {
        self.swallowed_at.is_none()
    }

    /// Applies `step`; returns true when the point is swallowed by it.
    /// A point counts as swallowed when its image lands within `eps` of the
    /// driver, or when it sits within `eps` of the real axis and the driver
    /// jumped across it. `eps` refers to a full `dt` step and shrinks on finer
    /// steps.
    pub fn advance(&mut self, step: &Step, eps: f64) -> Result<bool> {
        let eps = eps * step.eps_scale;
        if !self.active() {
            return Ok(false);
        }
        let before = self.z - step.w_start;
        let z = step.forward(self.z);
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(SleError::Numerical(format!(
                "flow blew up at capacity time {} without a swallow",
                step.t_end
            )));
        }
        self.z = z;
        let after = z - step.w_end;
        let crossed = z.im < eps && before.re * after.re < 0.0;
        // real images sit at least 2 sqrt(dcap) from the driver; for them only a crossing counts
        let close = z.im > 0.0 && modulus(after) < eps;
        if close || crossed {
            self.approach = before;
            self.swallowed_at = Some(step.t_end);
            return Ok(true);
        }
        Ok(false)
    }

    /// Replays `history` from the starting point `z0`.
    pub fn replay(z0: Complex64, history: &[Step], eps: f64) -> Result<Self> {
        let mut p = Particle::new(z0);
        for step in history {
            if p.advance(step, eps)? {
                break;
            }
        }
        Ok(p)
    }
}

/// Trace point after `k + 1` steps: the tip of step `k` pulled back through
/// the earlier steps.
pub(crate) fn tip_point(history: &[Step], k: usize) -> Complex64 {
    let mut z = history[k].tip();
    for step in history[..k].iter().rev() {
        z = step.inverse(z);
    }
    z
}
