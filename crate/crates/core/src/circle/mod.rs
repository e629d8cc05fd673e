//! Dynamics of `T̄ₐ` on the circle `S¹ ⊂ ℝ²`.
//!
//! Points are identified with complex numbers `x₁ + i x₂` and angles run
//! counterclockwise in `[0, 2π)`.

mod closed_form;
mod involution;
mod kernel;
mod witness;

pub use closed_form::{
    classify_rotation, eigenvector_period2, neg_identity_analysis, rotation_fixed_points,
    rotation_has_fixed_points, TOL_ALIGN,
};
pub use involution::{involution_check, involution_check_with, InvolutionReport, INVOLUTION_SAMPLES};
pub use kernel::{
    angle_of, displacement_roots, point_at, wrap, CircleMap, BISECTION_WIDTH, DEDUP_ANGLE,
    MULTIPLIER_STEP, N_SCAN, N_SCAN_MAX,
};
pub use witness::{nondistal_witness_circle, periodic_power, NONDISTAL_SEPARATION, NONDISTAL_THRESHOLD};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::AffineSphereSystem;

/// Tolerance on `|multiplier − 1|` separating attracting/repelling from neutral.
pub const TOL_MULT: f64 = 1e-6;
/// Residual required of refined periodic points.
pub const TOL_FP: f64 = 1e-9;
/// Distance below which `T̄ᵈ(x) = x` counts as a return in the minimal-period test.
const PERIOD_RETURN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Attracting,
    Repelling,
    Neutral,
    Undetermined,
}

impl Stability {
    pub fn from_multiplier(m: f64) -> Self {
        if !m.is_finite() {
            Self::Undetermined
        } else if m < 1.0 - TOL_MULT {
            Self::Attracting
        } else if m > 1.0 + TOL_MULT {
            Self::Repelling
        } else {
            Self::Neutral
        }
    }
}

/// A fixed or periodic point on the circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRecord {
    pub point: [f64; 2],
    pub angle: f64,
    /// Minimal period.
    pub period: u32,
    /// `‖T̄ₐᵖ(x) − x‖`.
    pub residual: f64,
    pub stability: Stability,
    /// `|d/dφ|` of the angle map of `T̄ₐᵖ` at the point.
    pub multiplier: f64,
}

impl FixedPointRecord {
    /// Builds a record for `x` under `T̄ᵖ` with a numerically measured multiplier.
    pub fn measure(map: &CircleMap, x: [f64; 2], period: u32) -> Self {
        let angle = angle_of(x);
        let residual = kernel::dist2(map.iterate(x, period), x);
        let multiplier = map.multiplier(angle, period);
        Self { point: x, angle, period, residual, stability: Stability::from_multiplier(multiplier), multiplier }
    }
}

/// Smallest `d | p` with `T̄ᵈ(x) = x`.
fn minimal_period(map: &CircleMap, x: [f64; 2], p: u32) -> u32 {
    (1..p)
        .filter(|d| p.is_multiple_of(*d))
        .find(|&d| kernel::dist2(map.iterate(x, d), x) < PERIOD_RETURN_TOL)
        .unwrap_or(p)
}

fn check_circle_system(sys: &AffineSphereSystem) -> Result<CircleMap> {
    let map = CircleMap::from_system(sys)?;
    if !sys.is_certified() {
        return Err(Error::NotInvertible);
    }
    Ok(map)
}

/// Points with `T̄ₐᵖ(x) = x`, found by scanning the angular displacement on a
/// uniform grid and bisecting sign changes. Each record carries its minimal
/// period, which may be a proper divisor of `period`.
pub fn fixed_points_numeric(sys: &AffineSphereSystem, period: u32) -> Result<Vec<FixedPointRecord>> {
    fixed_points_numeric_with(sys, period, N_SCAN)
}

/// As `fixed_points_numeric`, starting the scan at `n_scan` cells.
pub fn fixed_points_numeric_with(
    sys: &AffineSphereSystem,
    period: u32,
    n_scan: usize,
) -> Result<Vec<FixedPointRecord>> {
    let map = check_circle_system(sys)?;
    fixed_points_of_map(&map, period, n_scan)
}

/// The scan on a bare circle map; used directly by the sweeps.
pub fn fixed_points_of_map(map: &CircleMap, period: u32, n_scan: usize) -> Result<Vec<FixedPointRecord>> {
    if !(1..=4).contains(&period) {
        return Err(Error::InvalidInput(format!("period {period} outside 1..=4")));
    }
    let roots = displacement_roots(map, period, n_scan, N_SCAN_MAX.max(n_scan))?;
    let mut out = Vec::with_capacity(roots.len());
    for phi in roots {
        let x = point_at(phi);
        let d = minimal_period(map, x, period);
        let rec = FixedPointRecord::measure(map, x, d);
        if rec.residual < TOL_FP {
            out.push(rec);
        }
    }
    Ok(out)
}

/// Records of minimal period exactly `p`.
pub fn of_minimal_period(records: &[FixedPointRecord], p: u32) -> Vec<FixedPointRecord> {
    records.iter().filter(|r| r.period == p).cloned().collect()
}
