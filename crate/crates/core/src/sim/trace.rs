//! Trace reconstruction and trace-based events.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::driver::DriverPath;
use super::flow::{run, tip_point, Control, Step, StepPolicy, Tracker};
use super::events::hit_semicircle_flow;
use super::TrialOutcome;
use crate::error::{domain, Result, SleError};
use crate::maps::{mobius_h_inverse, Semicircle};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub times: Vec<f64>,
    pub points: Vec<Complex64>,
    /// finest capacity step used
    pub resolution: f64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest modulus reached.
    pub fn max_modulus(&self) -> f64 {
        self.points.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Capacity time at which `|point| > radius` first holds.
    pub fn exit_time(&self, radius: f64) -> Option<f64> {
        self.points.iter().position(|z| z.norm() > radius).map(|k| self.times[k])
    }

    /// Rows `trial_id, step, capacity_time, re, im`.
    pub fn write_csv<W: Write>(&self, trial_id: u64, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial_id", "step", "capacity_time", "re", "im"]).map_err(io_error)?;
        for (k, (t, z)) in self.times.iter().zip(&self.points).enumerate() {
            w.serialize((trial_id, k, t, z.re, z.im)).map_err(io_error)?;
        }
        w.flush().map_err(|e| SleError::Numerical(format!("writing trace: {e}")))?;
        Ok(())
    }
}

fn io_error(e: csv::Error) -> SleError {
    SleError::Numerical(format!("writing csv: {e}"))
}

/// Rows `trial_id, step, increment`.
pub fn write_driver_csv<W: Write>(driver: &DriverPath, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial_id", "step", "increment"]).map_err(io_error)?;
    for (k, dw) in driver.increments()?.iter().enumerate() {
        w.serialize((driver.trial_id(), k + 1, dw)).map_err(io_error)?;
    }
    w.flush().map_err(|e| SleError::Numerical(format!("writing driver: {e}")))?;
    Ok(())
}

struct Silent;

impl Tracker for Silent {
    fn is_clear(&mut self, _: &[Step], _: f64, _: f64, _: f64) -> Result<bool> {
        Ok(false)
    }

    fn advance(&mut self, _: &[Step], _: &Step) -> Result<Control> {
        Ok(Control::Continue)
    }
}

/// Trace with one point per fine driver step. Quadratic in the step count.
pub fn compute_trace(driver: &DriverPath) -> Result<Trace> {
    let steps = run(driver, StepPolicy::Uniform, &mut Silent)?;
    trace_from_steps(&steps)
}

/// Trace through the tips of an arbitrary step sequence.
pub fn trace_from_steps(steps: &[Step]) -> Result<Trace> {
    let mut times = Vec::with_capacity(steps.len() + 1);
    let mut points = Vec::with_capacity(steps.len() + 1);
    times.push(0.0);
    points.push(Complex64::new(0.0, 0.0));
    let mut resolution = f64::INFINITY;
    for (k, step) in steps.iter().enumerate() {
        let z = tip_point(steps, k);
        if !(z.re.is_finite() && z.im.is_finite()) || z.im < 0.0 {
            return Err(SleError::Numerical(format!("trace reconstruction failed at step {}", k + 1)));
        }
        times.push(step.t_end);
        points.push(z);
        resolution = resolution.min(step.dcap);
    }
    Ok(Trace { times, points, resolution })
}

/// Typical trace step length among points within `band` of the probe disk.
pub fn local_step_length(trace: &Trace, center: Complex64, radius: f64, band: f64) -> f64 {
    let mut lengths: Vec<f64> = trace
        .points
        .windows(2)
        .filter(|w| (w[1] - center).norm() <= radius + band)
        .map(|w| (w[1] - w[0]).norm())
        .collect();
    if lengths.is_empty() {
        return 0.0;
    }
    lengths.sort_by(f64::total_cmp);
    lengths[lengths.len() / 2]
}

/// Closed-disk entry: the trace comes within `radius + tol` of the center.
pub fn hit_semicircle(trace: &Trace, probe: &Semicircle, tol: f64) -> TrialOutcome {
    disk_entry(trace, Complex64::new(probe.center, 0.0), probe.radius, tol)
}

pub(crate) fn disk_entry(trace: &Trace, center: Complex64, radius: f64, tol: f64) -> TrialOutcome {
    let hit = trace.points.iter().position(|z| (z - center).norm() <= radius + tol);
    TrialOutcome {
        event_hit: hit.is_some(),
        first_hit_time: hit.map(|k| trace.times[k]),
        resolution: trace.resolution,
        horizon: trace.times.last().copied().unwrap_or(0.0),
        ..TrialOutcome::default()
    }
}

/// A standard trace carried to a path from 0 toward `x` by the inverse of
/// the Moebius map normalized by `big_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePath {
    pub trace: Trace,
    /// points dropped because they map too close to the pole
    pub clipped: usize,
}

pub fn trace_from_zero_to_x(trace: &Trace, x: f64, big_r: f64) -> Result<ImagePath> {
    if !(x > 0.0) {
        return domain(format!("target point must be positive, got {x}"));
    }
    let mut out = Trace { times: Vec::new(), points: Vec::new(), resolution: trace.resolution };
    let mut clipped = 0;
    for (t, z) in trace.times.iter().zip(&trace.points) {
        match mobius_h_inverse(*z, x, big_r) {
            Ok(w) if w.re.is_finite() && w.im.is_finite() && w.norm() < 1e12 => {
                out.times.push(*t);
                out.points.push(w);
            }
            Ok(_) | Err(SleError::Pole(_)) => clipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(ImagePath { trace: out, clipped })
}

/// Both sides of the diameter coupling for one driver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiameterOutcome {
    /// the standard trace enters the closed disk bounded by C(-1; 1/R)
    pub standard_hit: bool,
    /// the image path from 0 toward `x` reaches the circle C(0; R x)
    pub image_hit: bool,
    /// the forward-flow decision for C(-1; 1/R)
    pub flow_hit: bool,
    pub clipped: usize,
    pub steps: usize,
}

/// Runs the diameter event both ways. The trace comes from the steps of
/// the flow detector, which are refined wherever the curve nears the probe.
pub fn diameter_event(driver: &DriverPath, x: f64, big_r: f64, swallow_eps: f64) -> Result<DiameterOutcome> {
    let probe = Semicircle::new(-1.0, 1.0 / big_r)?;
    let (flow, steps) = hit_semicircle_flow(driver, &probe, swallow_eps, StepPolicy::default())?;
    let trace = trace_from_steps(&steps)?;
    let center = Complex64::new(probe.center, 0.0);
    let tol = TOUCH_STEPS * local_step_length(&trace, center, probe.radius, DIAMETER_BAND * probe.radius);
    let standard_hit = hit_semicircle(&trace, &probe, tol).event_hit;

    let image = trace_from_zero_to_x(&trace, x, big_r)?;
    let far = big_r * x;
    let mut lengths: Vec<f64> = image
        .trace
        .points
        .windows(2)
        .filter(|w| (w[1].norm() - far).abs() <= DIAMETER_BAND * far)
        .map(|w| (w[1] - w[0]).norm())
        .collect();
    lengths.sort_by(f64::total_cmp);
    let image_tol = TOUCH_STEPS * lengths.get(lengths.len() / 2).copied().unwrap_or(0.0);
    let image_hit = image.trace.points.iter().any(|w| w.norm() >= far - image_tol);
    Ok(DiameterOutcome {
        standard_hit,
        image_hit,
        flow_hit: flow.event_hit,
        clipped: image.clipped,
        steps: steps.len(),
    })
}

/// Disk entry tolerance, in typical trace steps near the probe.
const TOUCH_STEPS: f64 = 3.0;
/// Width of the band around a circle where trace steps are measured, in radii.
const DIAMETER_BAND: f64 = 0.4;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SleParams;
    use crate::sim::driver::sample_driver;

    #[test]
    fn zero_driver_gives_vertical_segment() {
        let d = sample_driver(&SleParams::new(4.0).unwrap(), 0.01, 1.0, 1, 1).unwrap().zero_noise();
        let trace = compute_trace(&d).unwrap();
        assert_eq!(trace.len(), 101);
        assert_eq!(trace.points[0], Complex64::new(0.0, 0.0));
        for (t, z) in trace.times.iter().zip(&trace.points) {
            assert!(z.re.abs() < 1e-9);
            assert!((z.im - 2.0 * t.sqrt()).abs() < 1e-6, "t={t} z={z}");
        }
        assert!(trace.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn vertical_segment_misses_offset_probe() {
        let d = sample_driver(&SleParams::new(4.0).unwrap(), 0.01, 1.0, 1, 1).unwrap().zero_noise();
        let trace = compute_trace(&d).unwrap();
        let probe = Semicircle::new(1.0, 0.1).unwrap();
        assert!(!hit_semicircle(&trace, &probe, 0.01).event_hit);
        // a probe centred on the trace is always hit
        let on = Semicircle::new(0.0, 0.1).unwrap();
        let out = hit_semicircle(&trace, &on, 0.0);
        assert!(out.event_hit);
        assert_eq!(out.first_hit_time, Some(0.0));
    }

    #[test]
    fn small_kappa_stays_in_cone() {
        let p = SleParams::new(0.01).unwrap();
        let mut worst: f64 = 0.0;
        for trial in 0..100 {
            let d = sample_driver(&p, 1e-3, 1.0, 17, trial).unwrap();
            let trace = compute_trace(&d).unwrap();
            for z in &trace.points[1..] {
                worst = worst.max(z.re.abs() / z.norm());
            }
        }
        assert!(worst < 0.2, "max |Re|/|z| = {worst}");
    }

    #[test]
    fn trace_csv_round_trip() {
        let d = sample_driver(&SleParams::new(6.0).unwrap(), 0.01, 0.1, 3, 9).unwrap();
        let trace = compute_trace(&d).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(9, &mut buf).unwrap();
        let mut rd = csv::Reader::from_reader(buf.as_slice());
        let rows: Vec<(u64, usize, f64, f64, f64)> = rd.deserialize().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), trace.len());
        for (row, (t, z)) in rows.iter().zip(trace.times.iter().zip(&trace.points)) {
            assert_eq!(row.0, 9);
            assert_eq!(row.2, *t);
            assert_eq!((row.3, row.4), (z.re, z.im));
        }
        let mut buf = Vec::new();
        write_driver_csv(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert!(text.starts_with("trial_id,step,increment\n9,1,"));
    }

    #[test]
    fn image_path_starts_at_zero() {
        let d = sample_driver(&SleParams::new(8.0 / 3.0).unwrap(), 1e-3, 1.0, 5, 0).unwrap();
        let trace = compute_trace(&d).unwrap();
        let image = trace_from_zero_to_x(&trace, 1.0, 4.0).unwrap();
        assert_eq!(image.trace.points[0], Complex64::new(0.0, 0.0));
        assert_eq!(image.clipped, 0);
        assert!(image.trace.points.iter().all(|z| z.im >= -1e-15));
    }
}
