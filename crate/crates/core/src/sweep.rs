//! Parameter sweeps over rotations `T = R(θ)` with offset `a = (0, α)`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::circle::{fixed_points_of_map, of_minimal_period, CircleMap, Stability, N_SCAN};
use crate::error::{Error, Result};

/// Half-width of the band around `cos θ = √(1 − α²)` flagged in sweeps.
pub const BOUNDARY_BAND: f64 = 1e-3;

/// A uniform axis `start, start + step, …` up to and including `stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) || stop < start || !(step > 0.0) {
            return Err(Error::InvalidInput(format!("bad axis {start}:{stop}:{step}")));
        }
        Ok(Self { start, stop, step })
    }

    /// A single value.
    pub fn point(v: f64) -> Self {
        Self { start: v, stop: v, step: 1.0 }
    }

    pub fn values(&self) -> Vec<f64> {
        // Tolerates rounding in (stop − start)/step.
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + self.step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub theta: f64,
    pub alpha: f64,
    pub fixed_count: usize,
    pub period2_count: usize,
    pub attracting_q: Option<[f64; 2]>,
    pub boundary: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepGrid {
    pub theta_axis: Axis,
    pub alpha_axis: Axis,
    pub thetas: Vec<f64>,
    pub alphas: Vec<f64>,
    /// Theta-major: all alphas for the first theta, then the next theta.
    pub cells: Vec<SweepCell>,
}

pub fn boundary_flag(theta: f64, alpha: f64) -> bool {
    (theta.cos() - (1.0 - alpha * alpha).sqrt()).abs() < BOUNDARY_BAND
}

/// Fixed and minimal period-2 counts for one `(θ, α)`.
pub fn sweep_cell(theta: f64, alpha: f64) -> Result<SweepCell> {
    let map = CircleMap::rotation(theta, [0.0, alpha]);
    let fixed = fixed_points_of_map(&map, 1, N_SCAN)?;
    let period2 = of_minimal_period(&fixed_points_of_map(&map, 2, N_SCAN)?, 2);
    Ok(SweepCell {
        theta,
        alpha,
        fixed_count: fixed.len(),
        period2_count: period2.len(),
        attracting_q: fixed.iter().find(|r| r.stability == Stability::Attracting).map(|r| r.point),
        boundary: boundary_flag(theta, alpha),
    })
}

/// Evaluates every cell in parallel; the output order is always theta-major.
pub fn sweep(theta_axis: Axis, alpha_axis: Axis) -> Result<SweepGrid> {
    let thetas = theta_axis.values();
    let alphas = alpha_axis.values();
    if let Some(bad) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidAlpha { alpha: *bad });
    }
    let pairs: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| alphas.iter().map(move |&a| (t, a))).collect();
    let cells = pairs.par_iter().map(|&(t, a)| sweep_cell(t, a)).collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid { theta_axis, alpha_axis, thetas, alphas, cells })
}

impl SweepGrid {
    /// CSV with 17 significant digits and `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,alpha,fixed_count,period2_count,boundary\n");
        for c in &self.cells {
            writeln!(out, "{:.16e},{:.16e},{},{},{}", c.theta, c.alpha, c.fixed_count, c.period2_count, c.boundary)
                .expect("writing to a String");
        }
        out
    }
}
