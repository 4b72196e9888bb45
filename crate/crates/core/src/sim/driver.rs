//! Brownian driving function sampled on a dyadic tree.
//!
//! The path over `[0, 2^depth * dt]` is built by Brownian-bridge midpoint
//! refinement. Every tree node owns a fixed position in a ChaCha8 stream
//! selected by `(seed, trial_id)`, so the value at any fine step is a pure
//! function of those two numbers and never depends on the order in which
//! nodes were visited. Coarser copies of the path reuse the same nodes.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::params::SleParams;

/// Deepest supported tree.
pub(crate) const MAX_DEPTH: u32 = 120;

/// Nodes at or above this index draw from a sub-stream keyed by their high bits.
const DEEP_NODE: u128 = 1 << 62;
const DEEP_SHIFT: u32 = 40;

/// Longest path `values` will build.
const MATERIALIZE_LIMIT: u128 = 1 << 28;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriverPath {
    kappa: f64,
    /// raw duration covered by the root node
    root_time: f64,
    depth: u32,
    n_steps: u128,
    seed: u64,
    trial_id: u64,
    /// `W = sign * space * raw`, with time scaled by `space^2`
    sign: f64,
    space: f64,
    noise: bool,
}

impl DriverPath {
    pub fn new(params: &SleParams, dt: f64, horizon: f64, seed: u64, trial_id: u64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return domain(format!("dt must be positive, got {dt}"));
        }
        if !(horizon >= dt) || !horizon.is_finite() {
            return domain(format!("horizon must be at least dt, got {horizon}"));
        }
        // tolerate horizons that are a whole number of steps up to rounding
        let ratio = horizon / dt;
        let n_steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio {
            ratio.round()
        } else {
            ratio.ceil()
        };
        if ratio > 1e36 {
            return domain(format!("{ratio:e} steps exceed the supported tree depth"));
        }
        let n_steps = n_steps as u128;
        let depth = 128 - (n_steps - 1).leading_zeros();
        if depth > MAX_DEPTH {
            return domain(format!("{n_steps} steps exceed the supported tree depth"));
        }
        Ok(DriverPath {
            kappa: params.kappa(),
            root_time: dt * (1u128 << depth) as f64,
            depth,
            n_steps,
            seed,
            trial_id,
            sign: 1.0,
            space: 1.0,
            noise: true,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dt(&self) -> f64 {
        self.span_time(1)
    }

    pub fn n_steps(&self) -> u128 {
        self.n_steps
    }

    pub fn horizon(&self) -> f64 {
        self.n_steps as f64 * self.dt()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trial_id(&self) -> u64 {
        self.trial_id
    }

    pub(crate) fn depth(&self) -> u32 {
        self.depth
    }

    /// Capacity time spanned by `steps` fine steps.
    pub(crate) fn span_time(&self, steps: u128) -> f64 {
        self.root_time * self.space * self.space * steps as f64 / (1u128 << self.depth) as f64
    }

    /// Mirror image `W -> -W`.
    pub fn reflected(&self) -> Self {
        DriverPath { sign: -self.sign, ..*self }
    }

    /// Brownian rescaling `W(t) -> s W(t / s^2)`; dt and horizon grow by `s^2`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return domain(format!("scale factor must be positive, got {s}"));
        }
        Ok(DriverPath { space: self.space * s, ..*self })
    }

    /// The same path with every increment replaced by zero.
    pub fn zero_noise(&self) -> Self {
        DriverPath { noise: false, ..*self }
    }

    /// The same path observed every `2^levels` steps: each coarse increment
    /// is the sum of the fine increments it covers.
    pub fn coarsened(&self, levels: u32) -> Result<Self> {
        if levels > self.depth {
            return domain(format!("cannot coarsen a depth-{} path by {levels} levels", self.depth));
        }
        let factor = 1u128 << levels;
        Ok(DriverPath {
            depth: self.depth - levels,
            n_steps: self.n_steps.div_ceil(factor),
            ..*self
        })
    }

    /// Driver value at the end of the root node.
    pub(crate) fn root_end(&self, nodes: &mut NodeSampler) -> f64 {
        self.noise_scale(self.root_time) * nodes.normal(0)
    }

    /// Bridge midpoint for heap node `node`. Nodes below the fine level
    /// continue the same construction, so a path can be refined past `dt`.
    pub(crate) fn midpoint(&self, nodes: &mut NodeSampler, node: u128, w_lo: f64, w_hi: f64) -> f64 {
        let raw = self.root_time / 2f64.powi(node_level(node) as i32);
        0.5 * (w_lo + w_hi) + self.noise_scale(0.25 * raw) * nodes.normal(node)
    }

    /// Capacity time spanned by one node at tree level `level`.
    pub(crate) fn level_time(&self, level: u32) -> f64 {
        self.root_time * self.space * self.space / 2f64.powi(level as i32)
    }

    fn noise_scale(&self, raw_time: f64) -> f64 {
        if self.noise {
            self.sign * self.space * (self.kappa * raw_time).sqrt()
        } else {
            0.0
        }
    }

    pub(crate) fn sampler(&self) -> NodeSampler {
        NodeSampler::new(self.seed, self.trial_id)
    }

    /// Driver values at steps `0..=n_steps`, starting from 0.
    ///
    /// Fails for paths too long to hold in memory.
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.n_steps > MATERIALIZE_LIMIT {
            return domain(format!("{} steps are too many to materialize", self.n_steps));
        }
        let mut nodes = self.sampler();
        let full = 1u128 << self.depth;
        let mut out = vec![0.0; (self.n_steps + 1) as usize];
        let end = self.root_end(&mut nodes);
        if self.n_steps == full {
            out[full as usize] = end;
        }
        self.fill(&mut nodes, &mut out, 1, 0, full, 0.0, end);
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn fill(&self, nodes: &mut NodeSampler, out: &mut [f64], node: u128, lo: u128, hi: u128, w_lo: f64, w_hi: f64) {
        if hi - lo < 2 || lo >= self.n_steps {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let w_mid = self.midpoint(nodes, node, w_lo, w_hi);
        if mid <= self.n_steps {
            out[mid as usize] = w_mid;
        }
        self.fill(nodes, out, 2 * node, lo, mid, w_lo, w_mid);
        self.fill(nodes, out, 2 * node + 1, mid, hi, w_mid, w_hi);
    }

    /// The `n_steps` driver increments.
    pub fn increments(&self) -> Result<Vec<f64>> {
        Ok(self.values()?.windows(2).map(|w| w[1] - w[0]).collect())
    }

    /// Driver value after `step` steps, found by descending the tree.
    pub fn value_at(&self, step: u128) -> f64 {
        let mut nodes = self.sampler();
        let (mut node, mut lo, mut hi) = (1u128, 0u128, 1u128 << self.depth);
        let (mut w_lo, mut w_hi) = (0.0, self.root_end(&mut nodes));
        loop {
            if step == lo {
                return w_lo;
            }
            if step == hi {
                return w_hi;
            }
            let mid = lo + (hi - lo) / 2;
            let w_mid = self.midpoint(&mut nodes, node, w_lo, w_hi);
            if step < mid {
                node *= 2;
                hi = mid;
                w_hi = w_mid;
            } else {
                node = 2 * node + 1;
                lo = mid;
                w_lo = w_mid;
            }
        }
    }
}

/// Level of heap node `node`; the root is node 1 at level 0.
pub(crate) fn node_level(node: u128) -> u32 {
    127 - node.leading_zeros()
}

/// Standard normals addressed by tree node.
///
/// A ChaCha stream holds 2^66 words, so deep nodes are split by their high
/// bits into separately keyed streams.
pub(crate) struct NodeSampler {
    seed: u64,
    trial_id: u64,
    rng: ChaCha8Rng,
    deep: Option<(u128, ChaCha8Rng)>,
}

impl NodeSampler {
    fn new(seed: u64, trial_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial_id);
        NodeSampler { seed, trial_id, rng, deep: None }
    }

    fn stream_for(&mut self, node: u128) -> (&mut ChaCha8Rng, u128) {
        if node < DEEP_NODE {
            return (&mut self.rng, node);
        }
        let high = node >> DEEP_SHIFT;
        if self.deep.as_ref().is_none_or(|(h, _)| *h != high) {
            let mut key = [0u8; 32];
            key[..8].copy_from_slice(&self.seed.to_le_bytes());
            key[8..24].copy_from_slice(&high.to_le_bytes());
            key[24..].copy_from_slice(b"deepnode");
            let mut rng = ChaCha8Rng::from_seed(key);
            rng.set_stream(self.trial_id);
            self.deep = Some((high, rng));
        }
        let rng = &mut self.deep.as_mut().expect("deep stream just set").1;
        (rng, node & ((1 << DEEP_SHIFT) - 1))
    }

    /// Box-Muller on the two 64-bit words owned by `node`.
    pub(crate) fn normal(&mut self, node: u128) -> f64 {
        let (rng, slot) = self.stream_for(node);
        rng.set_word_pos(slot * 4);
        let u1 = unit_open(rng.next_u64());
        let u2 = unit_open(rng.next_u64());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Convenience constructor mirroring [`DriverPath::new`].
pub fn sample_driver(params: &SleParams, dt: f64, horizon: f64, seed: u64, trial_id: u64) -> Result<DriverPath> {
    DriverPath::new(params, dt, horizon, seed, trial_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kappa: f64) -> SleParams {
        SleParams::new(kappa).unwrap()
    }

    #[test]
    fn step_count_and_horizon() {
        let d = sample_driver(&params(2.0), 0.01, 1.0, 1, 0).unwrap();
        assert_eq!(d.n_steps(), 100);
        assert_eq!(d.depth(), 7);
        assert!((d.horizon() - 1.0).abs() < 1e-12);
        let d = sample_driver(&params(2.0), 0.3, 1.0, 1, 0).unwrap();
        assert_eq!(d.n_steps(), 4);
        assert!(sample_driver(&params(2.0), 0.0, 1.0, 1, 0).is_err());
        assert!(sample_driver(&params(2.0), 0.1, 0.05, 1, 0).is_err());
    }

    #[test]
    fn deterministic_per_trial() {
        let p = params(6.0);
        let a = sample_driver(&p, 1e-3, 1.0, 42, 7).unwrap().increments().unwrap();
        let b = sample_driver(&p, 1e-3, 1.0, 42, 7).unwrap().increments().unwrap();
        let c = sample_driver(&p, 1e-3, 1.0, 42, 8).unwrap().increments().unwrap();
        let d = sample_driver(&p, 1e-3, 1.0, 43, 7).unwrap().increments().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn point_queries_match_materialized_path() {
        let d = sample_driver(&params(8.0 / 3.0), 1e-3, 0.7, 5, 3).unwrap();
        let values = d.values().unwrap();
        for step in [0u128, 1, 2, 99, 350, 511, 512, 699, 700] {
            assert_eq!(values[step as usize], d.value_at(step), "step {step}");
        }
    }

    #[test]
    fn increment_moments() {
        // 10^5 increments; the variance of a sample variance of N normals is 2 s^4 / (N - 1)
        let kappa = 6.0;
        let dt = 1e-4;
        let d = sample_driver(&params(kappa), dt, 10.0, 11, 0).unwrap();
        let inc = d.increments().unwrap();
        let n = inc.len() as f64;
        assert_eq!(inc.len(), 100_000);
        let mean = inc.iter().sum::<f64>() / n;
        let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let s2 = kappa * dt;
        assert!(mean.abs() < 3.0 * (s2 / n).sqrt(), "mean {mean}");
        assert!((var - s2).abs() < 3.0 * s2 * (2.0 / (n - 1.0)).sqrt(), "var {var} vs {s2}");
    }

    #[test]
    fn increments_uncorrelated() {
        let d = sample_driver(&params(4.0), 1e-4, 10.0, 12, 0).unwrap();
        let inc = d.increments().unwrap();
        let n = inc.len() - 1;
        let s2: f64 = inc.iter().map(|x| x * x).sum::<f64>() / inc.len() as f64;
        let lag1: f64 = inc.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / n as f64;
        assert!((lag1 / s2).abs() < 3.0 / (n as f64).sqrt(), "lag-1 correlation {}", lag1 / s2);
    }

    #[test]
    fn coarsening_sums_fine_increments() {
        let fine = sample_driver(&params(6.0), 1e-3, 1.0, 9, 2).unwrap();
        let coarse = fine.coarsened(2).unwrap();
        assert!((coarse.dt() - 4e-3).abs() < 1e-15);
        assert_eq!(coarse.n_steps(), 250);
        let fv = fine.values().unwrap();
        let cv = coarse.values().unwrap();
        for (k, w) in cv.iter().enumerate() {
            assert_eq!(*w, fv[4 * k]);
        }
    }

    #[test]
    fn reflection_scaling_and_zero_noise() {
        let d = sample_driver(&params(6.0), 1e-3, 1.0, 9, 2).unwrap();
        let v = d.values().unwrap();
        let r = d.reflected().values().unwrap();
        assert!(v.iter().zip(&r).all(|(a, b)| *a == -*b));
        let s = d.scaled(2.0).unwrap();
        assert!((s.dt() - 4e-3).abs() < 1e-15);
        assert!((s.horizon() - 4.0).abs() < 1e-12);
        assert!(v.iter().zip(s.values().unwrap()).all(|(a, b)| (2.0 * a - b).abs() < 1e-12));
        assert!(d.zero_noise().values().unwrap().iter().all(|w| *w == 0.0));
    }

    #[test]
    fn last_partial_block_is_consistent() {
        // 100 steps inside a 128-step root: the prefix must not depend on the horizon
        let p = params(3.0);
        let short = sample_driver(&p, 0.01, 1.0, 4, 4).unwrap().values().unwrap();
        let long = sample_driver(&p, 0.01, 1.28, 4, 4).unwrap().values().unwrap();
        assert_eq!(&short[..], &long[..101]);
    }

    #[test]
    fn deep_trees_stay_consistent() {
        // 1e21 steps, far past a single ChaCha stream
        let fine = sample_driver(&params(6.0), 1e-13, 1e8, 1, 7).unwrap();
        assert!(fine.depth() > 64);
        let coarse = fine.coarsened(fine.depth() - 10).unwrap();
        let shift = fine.depth() - 10;
        for k in [1u128, 3, 500, 1000] {
            let a = coarse.value_at(k);
            assert!(a.is_finite());
            assert_eq!(a, fine.value_at(k << shift));
        }
        // a deep fine step next to a coarse one moves by about sqrt(kappa dt)
        let step = 777u128 << shift;
        let jump = (fine.value_at(step + 1) - fine.value_at(step)).abs();
        assert!(jump < 10.0 * (6.0f64 * 1e-13).sqrt());
        assert!(sample_driver(&params(6.0), 1e-30, 1e8, 1, 7).is_err());
    }

    #[test]
    fn materializing_huge_paths_fails() {
        let d = sample_driver(&params(6.0), 1e-13, 1.0, 1, 7).unwrap();
        assert!(d.values().is_err());
    }
}
