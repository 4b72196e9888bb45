//! Discrete chordal Loewner evolution.
//!
//! Internal normalization: `hcap(K_t) = 2t` and `W_t = sqrt(kappa) B_t`, so the
//! maps solve `dg/dt = 2 / (g - W)`.

pub mod driver;
pub mod flow;

pub use driver::{sample_driver, DriverPath};
pub use flow::{Step, StepPolicy};
pub mod events;
pub mod trace;

pub use events::{
    default_swallow_eps, flow_point, flow_point_with, hit_interval, hit_interval_with, hit_semicircle_flow,
    left_passage_horizon, left_passage_indicator, left_passage_side, ring_points, swallow_together,
    swallow_together_points, FlowState, Side,
};
pub use trace::{
    compute_trace, diameter_event, hit_semicircle, local_step_length, trace_from_steps, trace_from_zero_to_x,
    write_driver_csv, DiameterOutcome, ImagePath, Trace,
};

use serde::{Deserialize, Serialize};

use crate::params::{Regime, SleParams};

/// Capacity horizon for events at distance `scale` from the origin.
///
/// A simple curve settles every event within a few squared scales. For
/// kappa > 4 swallowing times have a tail decaying only like t^(-1/6) (for
/// kappa = 6), so the horizon is pushed far out; the dyadic driver makes
/// cost grow only logarithmically with it.
pub fn default_horizon(params: &SleParams, scale: f64) -> f64 {
    let scale2 = scale.max(1.0).powi(2);
    match params.regime() {
        Regime::Simple => 25.0 * scale2,
        Regime::Touching => 1e12 * scale2,
    }
}

/// Result of one simulated trial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub event_hit: bool,
    pub first_hit_time: Option<f64>,
    /// finest capacity step
    pub resolution: f64,
    /// capacity horizon of the driver
    pub horizon: f64,
    /// slit maps actually composed
    pub steps: usize,
    /// the probe was swallowed without being touched
    pub enclosed: bool,
    pub interval: Option<IntervalConditions>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalConditions {
    /// the left end was swallowed before the horizon
    pub swallowed: bool,
    /// the right end was still outside the hull at that moment
    pub split: bool,
    /// the trace tip was then above the interval, up to its own height
    pub touched: bool,
}
