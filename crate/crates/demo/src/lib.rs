//! wasm-bindgen exports for the static page in `www/`.

use num_complex::Complex64;
use sle_lab::exact;
use sle_lab::numerics::Quadrature;
use sle_lab::sim::{compute_trace, sample_driver};
use sle_lab::SleParams;
use wasm_bindgen::prelude::*;

/// Exact traces are quadratic in the step count; keep the page responsive.
const MAX_TRACE_STEPS: u32 = 4000;

fn params(kappa: f64) -> Result<SleParams, String> {
    SleParams::new(kappa).map_err(|e| e.to_string())
}

pub fn left_passage_value(kappa: f64, theta: f64) -> Result<f64, String> {
    exact::left_passage_probability(theta, &params(kappa)?, &Quadrature::default()).map_err(|e| e.to_string())
}

/// `[re, im]` of the triangle map at `w`.
pub fn sc_map_value(kappa: f64, re: f64, im: f64) -> Result<Vec<f64>, String> {
    let f = exact::sc_map_f(Complex64::new(re, im), &params(kappa)?, &Quadrature::default()).map_err(|e| e.to_string())?;
    Ok(vec![f.re, f.im])
}

/// Trace up to capacity 1 as `[re0, im0, re1, im1, ...]`.
pub fn trace_points(kappa: f64, seed: u32, steps: u32) -> Result<Vec<f64>, String> {
    if steps == 0 || steps > MAX_TRACE_STEPS {
        return Err(format!("steps must lie in 1..={MAX_TRACE_STEPS}"));
    }
    let driver = sample_driver(&params(kappa)?, 1.0 / steps as f64, 1.0, seed as u64, 0).map_err(|e| e.to_string())?;
    let trace = compute_trace(&driver).map_err(|e| e.to_string())?;
    Ok(trace.points.iter().flat_map(|z| [z.re, z.im]).collect())
}

#[wasm_bindgen]
pub fn left_passage(kappa: f64, theta: f64) -> Result<f64, JsError> {
    left_passage_value(kappa, theta).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sc_map(kappa: f64, re: f64, im: f64) -> Result<Vec<f64>, JsError> {
    sc_map_value(kappa, re, im).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn trace(kappa: f64, seed: u32, steps: u32) -> Result<Vec<f64>, JsError> {
    trace_points(kappa, seed, steps).map_err(|e| JsError::new(&e))
}
