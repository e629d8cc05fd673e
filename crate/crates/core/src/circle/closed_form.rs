use crate::error::{Error, Result};
use crate::sphere::{complex_inv, complex_mul, AffineSphereSystem, TOL_BOUNDARY};

use super::kernel::{dist2, norm2, CircleMap};
use super::{check_circle_system, fixed_points_of_map, of_minimal_period, FixedPointRecord, Stability, N_SCAN};

/// Tolerance on the sine of the angle between `Ta` and `a`.
pub const TOL_ALIGN: f64 = 1e-9;

fn check_alpha(a: [f64; 2]) -> Result<f64> {
    let alpha = norm2(a);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha { alpha });
    }
    Ok(alpha)
}

/// Unit complex `s` with `s · (0, α) = a`.
fn canonical_turn(a: [f64; 2], alpha: f64) -> [f64; 2] {
    // s = −i a / α
    [a[1] / alpha, -a[0] / alpha]
}

/// `cos θ − √(1 − α²)`: nonnegative exactly when the rotation by `θ` with
/// offset of norm `α` has a fixed point.
pub fn rotation_has_fixed_points(theta: f64, alpha: f64) -> f64 {
    theta.cos() - (1.0 - alpha * alpha).sqrt()
}

/// Fixed points `a (t − r)⁻¹` of `T̄ₐ` for the rotation `r = e^{iθ}`, with
/// `t± = cos θ ± √(α² − sin² θ)` (the `t₊` point first).
pub fn rotation_fixed_points(theta: f64, a: [f64; 2]) -> Result<Vec<FixedPointRecord>> {
    let alpha = check_alpha(a)?;
    let gap = rotation_has_fixed_points(theta, alpha);
    if gap < -TOL_BOUNDARY {
        return Ok(Vec::new());
    }
    let map = CircleMap::rotation(theta, a);
    let (s, c) = theta.sin_cos();
    let r = [c, s];
    let point_for = |t: f64| {
        let x = complex_mul(a, complex_inv([t - r[0], -r[1]]));
        let n = norm2(x);
        [x[0] / n, x[1] / n]
    };
    if gap <= TOL_BOUNDARY {
        let mut rec = FixedPointRecord::measure(&map, point_for(c), 1);
        rec.stability = Stability::Neutral;
        return Ok(vec![rec]);
    }
    let root = (alpha * alpha - s * s).max(0.0).sqrt();
    Ok([c + root, c - root].iter().map(|&t| FixedPointRecord::measure(&map, point_for(t), 1)).collect())
}

/// `(Q, P)` for a rotation with two fixed points: `Q` attracting and `P`
/// repelling, from the explicit coordinates `(−r₂/α, ±√(α² − r₂²)/α)` in the
/// frame where `a = (0, α)`.
pub fn classify_rotation(theta: f64, a: [f64; 2]) -> Result<(FixedPointRecord, FixedPointRecord)> {
    let alpha = check_alpha(a)?;
    if rotation_has_fixed_points(theta, alpha) <= TOL_BOUNDARY {
        return Err(Error::NoFixedPoints);
    }
    let s = canonical_turn(a, alpha);
    let r2 = theta.sin();
    let h = (alpha * alpha - r2 * r2).max(0.0).sqrt() / alpha;
    let q = complex_mul(s, [-r2 / alpha, h]);
    let p = complex_mul(s, [-r2 / alpha, -h]);

    let map = CircleMap::rotation(theta, a);
    let q = FixedPointRecord::measure(&map, q, 1);
    let p = FixedPointRecord::measure(&map, p, 1);
    if q.stability != Stability::Attracting || p.stability != Stability::Repelling {
        return Err(Error::InternalInconsistency(format!(
            "rotation fixed points measured {:?}/{:?} (multipliers {}, {})",
            q.stability, p.stability, q.multiplier, p.multiplier
        )));
    }
    Ok((q, p))
}

/// The four period-2 points of `T̄ₐ` for `T = −Id`:
/// `x₀`, `a − x₀` (attracting for `T̄ₐ²`) and `ā`, `−ā` (repelling).
pub fn neg_identity_analysis(a: [f64; 2]) -> Result<Vec<FixedPointRecord>> {
    let alpha = check_alpha(a)?;
    let s = canonical_turn(a, alpha);
    let side = (1.0 - alpha * alpha / 4.0).sqrt();
    let canonical = [[-side, alpha / 2.0], [side, alpha / 2.0], [0.0, 1.0], [0.0, -1.0]];
    let expected = [Stability::Attracting, Stability::Attracting, Stability::Repelling, Stability::Repelling];

    let map = CircleMap::new([[-1.0, 0.0], [0.0, -1.0]], a)?;
    let records: Vec<FixedPointRecord> =
        canonical.iter().map(|&x| FixedPointRecord::measure(&map, complex_mul(s, x), 2)).collect();
    for (rec, want) in records.iter().zip(expected) {
        if rec.stability != want {
            return Err(Error::InternalInconsistency(format!(
                "period-2 point {:?} measured {:?}, expected {want:?}",
                rec.point, rec.stability
            )));
        }
    }

    let numeric = of_minimal_period(&fixed_points_of_map(&map, 2, N_SCAN)?, 2);
    let matched = records.iter().all(|r| numeric.iter().any(|n| dist2(n.point, r.point) < 1e-8));
    if numeric.len() != 4 || !matched {
        return Err(Error::InternalInconsistency(format!(
            "scan found {} period-2 points, closed form gives 4",
            numeric.len()
        )));
    }
    Ok(records)
}

/// Real eigenvalue `λ` with `Ta = λa`, when `a` is (numerically) an eigenvector.
pub(crate) fn offset_eigenvalue(map: &CircleMap) -> Option<f64> {
    let t = map.matrix();
    let a = map.offset();
    let alpha = norm2(a);
    if alpha == 0.0 {
        return None;
    }
    let ta = [t[0][0] * a[0] + t[0][1] * a[1], t[1][0] * a[0] + t[1][1] * a[1]];
    let cross = (ta[0] * a[1] - ta[1] * a[0]).abs() / (norm2(ta) * alpha);
    (cross <= TOL_ALIGN).then(|| (ta[0] * a[0] + ta[1] * a[1]) / (alpha * alpha))
}

/// `ā` as a period-2 point when `a` is an eigenvector for a negative
/// eigenvalue `λ₁` with `α < |λ₁|`: then `a + λ₁ā = (α + λ₁)ā` points along `−ā`.
pub fn eigenvector_period2(sys: &AffineSphereSystem) -> Result<Option<FixedPointRecord>> {
    let map = check_circle_system(sys)?;
    let Some(lambda) = offset_eigenvalue(&map) else {
        return Ok(None);
    };
    let alpha = sys.alpha();
    if !(lambda < 0.0 && alpha < -lambda) {
        return Ok(None);
    }
    let a = map.offset();
    let bar = [a[0] / alpha, a[1] / alpha];
    Ok(Some(FixedPointRecord::measure(&map, bar, 2)))
}
