use std::f64::consts::TAU;

use crate::certificate::{Witness, WitnessKind};
use crate::error::{Error, Result};
use crate::product::{AnySystem, DistalityVerdict};
use crate::sphere::AffineSphereSystem;

use super::kernel::{dist2, point_at, CircleMap};
use super::{check_circle_system, fixed_points_of_map, involution_check, Stability, N_SCAN};

/// Final distance a non-distal pair must reach.
pub const NONDISTAL_THRESHOLD: f64 = 1e-6;
/// Initial separation a non-distal pair must have.
pub const NONDISTAL_SEPARATION: f64 = 1e-3;

/// Angular offsets of the pair from the attracting point: symmetric first,
/// then one-sided pairs that keep one member on the periodic orbit.
const PAIR_OFFSETS: [(f64, f64); 3] = [(-6e-4, 6e-4), (0.0, 1.2e-3), (-1.2e-3, 0.0)];

/// Smallest `k ≤ 4` with `T̄ₐᵏ = Id` on 1000 equispaced sample points.
pub fn periodic_power(map: &CircleMap) -> Option<u32> {
    (1..=4).find(|&k| {
        (0..1000).all(|i| {
            let x = point_at(TAU * i as f64 / 1000.0);
            dist2(map.iterate(x, k), x) < 1e-9
        })
    })
}

/// A pair `x ≠ y` in the basin of an attracting periodic point whose orbits
/// approach each other; `Distal` for involutions and maps with `T̄ₐᵏ = Id`,
/// `Unknown` when no attracting point of period at most 4 exists.
pub fn nondistal_witness_circle(sys: &AffineSphereSystem, horizon: u64) -> Result<DistalityVerdict> {
    let map = check_circle_system(sys)?;
    if involution_check(sys)?.is_involution {
        return Ok(DistalityVerdict::Distal("involution".into()));
    }
    if let Some(k) = periodic_power(&map) {
        return Ok(DistalityVerdict::Distal(format!("periodic of order {k}")));
    }
    let any = AnySystem::Single(sys.clone());
    for p in 1..=4u32 {
        let records = match fixed_points_of_map(&map, p, N_SCAN) {
            Ok(r) => r,
            Err(Error::IdenticallyPeriodic { .. }) => continue,
            Err(e) => return Err(e),
        };
        for rec in records.iter().filter(|r| r.period == p && r.stability == Stability::Attracting) {
            for (d1, d2) in PAIR_OFFSETS {
                let x = crate::linalg::Vector::from_column_slice(&point_at(rec.angle + d1));
                let y = crate::linalg::Vector::from_column_slice(&point_at(rec.angle + d2));
                let w = Witness::converging_pair(
                    WitnessKind::NonDistalPair,
                    &any,
                    &x,
                    &y,
                    p as u64 * horizon,
                    NONDISTAL_THRESHOLD,
                    NONDISTAL_SEPARATION,
                )?;
                let data = w.pair().expect("pair witness");
                if data.claimed < NONDISTAL_THRESHOLD && data.separation >= NONDISTAL_SEPARATION {
                    return Ok(DistalityVerdict::NonDistal(w.with_period(p)));
                }
            }
        }
    }
    Ok(DistalityVerdict::Unknown("no attracting periodic point of period at most 4".into()))
}
