//! Special functions and quadrature behind every closed-form probability.

mod beta;
mod gamma;
mod quad;

pub use beta::{ln_beta, regularized_incomplete_beta};
pub use gamma::{gamma_ratio, ln_gamma};
pub use quad::{integrate_endpoint_power, integrate_line, integrate_ray, integrate_segment, integrate_segment_split, QuadEstimate, QuadValue, Quadrature};
