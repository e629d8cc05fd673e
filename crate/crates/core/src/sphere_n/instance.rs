use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::certificate::{Witness, WitnessKind};
use crate::circle::{classify_rotation, involution_check, NONDISTAL_SEPARATION, NONDISTAL_THRESHOLD};
use crate::error::Result;
use crate::linalg::{self, Matrix, PlaneFrame, Vector};
use crate::product::AnySystem;
use crate::sphere::AffineSphereSystem;

/// Iterations allowed for a convergence witness to reach its threshold.
pub const MAX_CONVERGENCE_STEPS: u64 = 1_000_000;
const PLANE_INVARIANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceCase {
    /// Rotation fixed point on the plane of a conformal complex block.
    ComplexRotation,
    /// Fixed point from a direction with `⟨B⁻¹u, u⟩ > 0` on a complex block.
    ComplexGeneral,
    /// `a = (λ/2) v̂` for an eigenvalue `λ > 0`; `v̂` is fixed.
    PositiveEigenvalue,
    /// `a = s v̂` for an eigenvalue `λ < 0` and `s < |λ|`; `v̂` has period 2.
    NegativeEigenvalue,
    /// Dominant eigenvector of `T/λ`; points of the contraction space converge to `ā`.
    Proximal,
}

/// A system `T̄ₐ` built from `T` together with evidence of non-distality.
#[derive(Debug, Clone)]
pub struct NondistalInstance {
    pub original: Matrix,
    /// `λ` when the system uses `T/λ` instead of `T`.
    pub normalization: Option<f64>,
    pub case: InstanceCase,
    pub system: AffineSphereSystem,
    pub plane: Option<PlaneFrame>,
    pub witness: Witness,
}

fn point_witness(sys: &AffineSphereSystem, x: &Vector, period: u32) -> Result<Option<Witness>> {
    let w = Witness::periodic_point(&AnySystem::Single(sys.clone()), x, period)?;
    let p = w.point().expect("point witness");
    Ok((p.residual <= w.tolerance && (period == 1 || p.return_gap > 2.0 * w.tolerance)).then_some(w))
}

fn instance(
    t: &Matrix,
    case: InstanceCase,
    sys: AffineSphereSystem,
    plane: Option<PlaneFrame>,
    witness: Option<Witness>,
) -> Option<NondistalInstance> {
    witness.map(|witness| NondistalInstance {
        original: t.clone(),
        normalization: None,
        case,
        system: sys,
        plane,
        witness,
    })
}

/// Top eigenvector of a symmetric 2×2 matrix.
fn top_symmetric_eigenvector(m: &Matrix) -> [f64; 2] {
    let phi = 0.5 * (2.0 * m[(0, 1)]).atan2(m[(0, 0)] - m[(1, 1)]);
    [phi.cos(), phi.sin()]
}

/// Fixed point `x = F u` of `T̄ₐ` with `a = τx − Tx`, where `u` maximizes
/// `⟨B⁻¹u, u⟩ > 0` for the block `B` of `T` on the plane and
/// `τ = ⟨B⁻¹u, u⟩ / ‖B⁻¹u‖²` gives `‖T⁻¹a‖² = 1 − ⟨B⁻¹u,u⟩²/‖B⁻¹u‖² < 1`.
pub(crate) fn general_plane_fixed_point(t: &Matrix, plane: &PlaneFrame) -> Result<Option<(Vector, Vector)>> {
    let b = plane.restrict(t);
    let b_inv = linalg::invert(&b)?;
    let sym = (&b_inv + b_inv.transpose()) * 0.5;
    let u = top_symmetric_eigenvector(&sym);
    let u = Vector::from_column_slice(&u);
    let bu = &b_inv * &u;
    let p = bu.dot(&u);
    if !(p > 0.0) {
        return Ok(None);
    }
    let tau = p / bu.norm_squared();
    let x = plane.embed([u[0], u[1]]);
    let a = &x * tau - t * &x;
    Ok(Some((a, x)))
}

fn complex_case(t: &Matrix, mu: Complex64) -> Result<Option<NondistalInstance>> {
    let Some(plane) = linalg::plane_for_complex(t, mu) else {
        return Ok(None);
    };
    if plane.invariance_residual(t) > PLANE_INVARIANCE_TOL * t.norm() {
        return Ok(None);
    }
    let b = plane.restrict(t);
    let modulus = mu.norm();
    let sin = (mu.im / modulus).abs();
    let conformal = (b.transpose() * &b - Matrix::identity(2, 2) * modulus * modulus).amax()
        <= 1e-10 * modulus * modulus
        && linalg::determinant(&b) > 0.0;

    if conformal {
        let theta = b[(1, 0)].atan2(b[(0, 0)]);
        let alpha = 0.5 * (1.0 + sin);
        if let Ok((q, _)) = classify_rotation(theta, [0.0, alpha]) {
            let a = plane.embed([0.0, modulus * alpha]);
            let x = plane.embed(q.point);
            if let Ok(sys) = AffineSphereSystem::build(t.clone(), a, true) {
                let w = point_witness(&sys, &x, 1)?;
                if let Some(inst) = instance(t, InstanceCase::ComplexRotation, sys, Some(plane.clone()), w) {
                    return Ok(Some(inst));
                }
            }
        }
    }
    let Some((a, x)) = general_plane_fixed_point(t, &plane)? else {
        return Ok(None);
    };
    let Ok(sys) = AffineSphereSystem::build(t.clone(), a, true) else {
        return Ok(None);
    };
    let w = point_witness(&sys, &x, 1)?;
    Ok(instance(t, InstanceCase::ComplexGeneral, sys, Some(plane), w))
}

fn eigenvector(t: &Matrix, lambda: f64) -> Option<Vector> {
    let n = t.nrows();
    let v = linalg::null_space(&(t - Matrix::identity(n, n) * lambda), 1).pop()?;
    let norm = v.norm();
    (norm > 0.0).then(|| v / norm)
}

fn positive_case(t: &Matrix, lambda: f64) -> Result<Option<NondistalInstance>> {
    let Some(v) = eigenvector(t, lambda) else {
        return Ok(None);
    };
    let Ok(sys) = AffineSphereSystem::build(t.clone(), &v * (0.5 * lambda), true) else {
        return Ok(None);
    };
    let w = point_witness(&sys, &v, 1)?;
    Ok(instance(t, InstanceCase::PositiveEigenvalue, sys, None, w))
}

fn negative_case(t: &Matrix, l1: f64, l2: f64) -> Result<Option<NondistalInstance>> {
    let plane = if t.nrows() == 2 {
        PlaneFrame { w1: vec![1.0, 0.0], w2: vec![0.0, 1.0] }
    } else {
        match linalg::plane_for_real_pair(t, l1, l2) {
            Some(p) => p,
            None => return Ok(None),
        }
    };
    let Some(v) = eigenvector(t, l1) else {
        return Ok(None);
    };
    if plane.off_plane(&v) > PLANE_INVARIANCE_TOL || plane.invariance_residual(t) > PLANE_INVARIANCE_TOL * t.norm() {
        return Ok(None);
    }
    let b = plane.restrict(t);
    // One offset length at most can make the restricted map an involution.
    for divisor in [2.0, 3.0, 5.0] {
        let a = &v * (l1.abs() / divisor);
        let Ok(sys) = AffineSphereSystem::build(t.clone(), a.clone(), true) else {
            continue;
        };
        let restricted =
            AffineSphereSystem::build(b.clone(), Vector::from_column_slice(&plane.coords(&a)), true)?;
        if involution_check(&restricted)?.is_involution {
            continue;
        }
        let w = point_witness(&sys, &v, 2)?;
        if let Some(inst) = instance(t, InstanceCase::NegativeEigenvalue, sys, Some(plane.clone()), w) {
            return Ok(Some(inst));
        }
    }
    Ok(None)
}

/// Unique eigenvalue of top modulus, if it is real and simple.
fn proximal_eigenvalue(values: &[Complex64]) -> Option<f64> {
    let top = values.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let at_top: Vec<&Complex64> = values.iter().filter(|e| (e.norm() - top).abs() <= 1e-9 * top).collect();
    (at_top.len() == 1 && at_top[0].im == 0.0).then(|| at_top[0].re)
}

/// The proximal construction: `S = T/λ`, `a = v̂/2` for the dominant
/// eigenvector `v̂`, and a point `x` of the contraction space of `S` whose
/// orbit converges to `ā`.
pub fn proximal_instance(t: &Matrix) -> Result<Option<NondistalInstance>> {
    linalg::invert(t)?;
    let values = linalg::eigenvalues(t)?;
    let Some(lambda) = proximal_eigenvalue(&values) else {
        return Ok(None);
    };
    if !(linalg::determinant(t) > 0.0) {
        return Ok(None);
    }
    let s = t / lambda;
    let Some(v) = eigenvector(&s, 1.0) else {
        return Ok(None);
    };
    let sys = AffineSphereSystem::build(s.clone(), &v * 0.5, true)?;
    let summary = linalg::spectrum(&s)?;
    let Some(mut x) = summary.contraction_vectors().into_iter().next() else {
        return Ok(None);
    };
    if x.dot(&v) > 0.0 {
        x = -x;
    }
    let Some(steps) = convergence_steps(&sys, &x, &v, NONDISTAL_THRESHOLD)? else {
        return Ok(None);
    };
    let w = Witness::converging_pair(
        WitnessKind::ConvergenceToPoint,
        &AnySystem::Single(sys.clone()),
        &x,
        &v,
        steps,
        NONDISTAL_THRESHOLD,
        NONDISTAL_SEPARATION,
    )?
    .with_period(1)
    .with_normalization(lambda);
    Ok(Some(NondistalInstance {
        original: t.clone(),
        normalization: Some(lambda),
        case: InstanceCase::Proximal,
        system: sys,
        plane: None,
        witness: w,
    }))
}

/// First `m` with `‖T̄ₐᵐ(x) − target‖ < threshold`.
pub fn convergence_steps(sys: &AffineSphereSystem, x: &Vector, target: &Vector, threshold: f64) -> Result<Option<u64>> {
    let mut p = x.clone();
    for m in 0..=MAX_CONVERGENCE_STEPS {
        if (&p - target).norm() < threshold {
            return Ok(Some(m));
        }
        p = sys.step(&p)?;
    }
    Ok(None)
}

/// A vector `a` with `‖T⁻¹a‖ < 1` for which `T̄ₐ` has a fixed point or a
/// point of period 2, or (failing that) a proximal convergence instance.
///
/// Case preference: complex eigenvalues `t e^{iθ}` with `0 < cos θ < 1`,
/// then a positive real eigenvalue, then a negative real eigenvalue when at
/// least two eigenvalues are real, then the proximal construction.
pub fn construct_nondistal_instance(t: &Matrix) -> Result<Option<NondistalInstance>> {
    linalg::invert(t)?;
    let values = linalg::eigenvalues(t)?;
    for mu in values.iter().filter(|e| e.im > 0.0) {
        let cos = mu.re / mu.norm();
        if cos > 0.0 && cos < 1.0 {
            if let Some(inst) = complex_case(t, *mu)? {
                return Ok(Some(inst));
            }
        }
    }
    let reals: Vec<f64> = values.iter().filter(|e| e.im == 0.0).map(|e| e.re).collect();
    for &lambda in reals.iter().filter(|l| **l > 0.0) {
        if let Some(inst) = positive_case(t, lambda)? {
            return Ok(Some(inst));
        }
    }
    if reals.len() >= 2 {
        for (i, &l1) in reals.iter().enumerate().filter(|(_, l)| **l < 0.0) {
            let l2 = reals[if i == 0 { 1 } else { 0 }];
            if let Some(inst) = negative_case(t, l1, l2)? {
                return Ok(Some(inst));
            }
        }
    }
    proximal_instance(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::verify;
    use crate::circle::fixed_points_numeric;
    use crate::linalg::{block_diag, diag, rotation};
    use std::f64::consts::PI;

    #[test]
    fn proximal_example_converges_quickly() {
        let inst = proximal_instance(&diag(&[2.0, 0.5, 0.3])).unwrap().unwrap();
        assert!((inst.normalization.unwrap() - 2.0).abs() < 1e-12);
        assert!((inst.system.offset()[0].abs() - 0.5).abs() < 1e-12);
        let d = inst.witness.pair().unwrap();
        assert!(d.steps <= 60, "took {} steps", d.steps);
        assert!(verify(&inst.witness).unwrap().pass);
    }

    #[test]
    fn positive_eigenvalues_are_preferred_to_convergence() {
        let inst = construct_nondistal_instance(&diag(&[2.0, 0.5, 0.3])).unwrap().unwrap();
        assert_eq!(inst.case, InstanceCase::PositiveEigenvalue);
        assert!(verify(&inst.witness).unwrap().pass);
    }

    #[test]
    fn rotation_block_gives_fixed_point_on_its_plane() {
        let t = block_diag(&[&rotation(PI / 4.0), &diag(&[1.0])]);
        let inst = construct_nondistal_instance(&t).unwrap().unwrap();
        assert_eq!(inst.case, InstanceCase::ComplexRotation);
        let p = inst.witness.point().unwrap();
        assert!(p.point[2].abs() < 1e-12);
        assert!(verify(&inst.witness).unwrap().pass);
    }

    #[test]
    fn scaled_identity_has_fixed_point() {
        let inst = construct_nondistal_instance(&(Matrix::identity(2, 2) * 2.0)).unwrap().unwrap();
        assert_eq!(inst.witness.kind, WitnessKind::FixedPoint);
        let sys = AffineSphereSystem::build(Matrix::identity(2, 2) * 2.0, Vector::from_column_slice(&[0.0, 0.9]), true)
            .unwrap();
        assert!(!fixed_points_numeric(&sys, 1).unwrap().is_empty());
    }

    #[test]
    fn sheared_complex_block_uses_general_construction() {
        let t = Matrix::from_row_slice(2, 2, &[1.0, 4.0, -0.25, 1.0]);
        let inst = construct_nondistal_instance(&t).unwrap().unwrap();
        assert_eq!(inst.case, InstanceCase::ComplexGeneral);
        assert!(inst.system.is_certified());
        assert!(verify(&inst.witness).unwrap().pass);
    }

    #[test]
    fn negative_pair_gives_period_two() {
        let inst = construct_nondistal_instance(&diag(&[-2.0, -3.0, -0.5])).unwrap().unwrap();
        assert_eq!(inst.case, InstanceCase::NegativeEigenvalue);
        assert_eq!(inst.witness.kind, WitnessKind::PeriodicOrbit);
        assert!(verify(&inst.witness).unwrap().pass);
    }

    #[test]
    fn obtuse_rotation_has_no_direct_instance() {
        assert!(construct_nondistal_instance(&rotation(2.0 * PI / 3.0)).unwrap().is_none());
    }
}
