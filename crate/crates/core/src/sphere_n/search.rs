use serde::{Deserialize, Serialize};

use crate::certificate::Witness;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, PlaneFrame, Vector};
use crate::product::AnySystem;
use crate::sphere::AffineSphereSystem;

use super::instance::{construct_nondistal_instance, general_plane_fixed_point, NondistalInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchKind {
    /// `S = Tᵏ`.
    Power(u32),
    /// `S = P T P⁻¹`.
    Conjugate,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub s: Matrix,
    pub kind: SearchKind,
    /// The conjugating matrix `P` in conjugate mode.
    pub conjugator: Option<Matrix>,
    pub a: Vector,
    pub system: AffineSphereSystem,
    pub witness: Witness,
}

impl SearchResult {
    fn from_instance(inst: NondistalInstance, kind: SearchKind, conjugator: Option<Matrix>) -> Self {
        Self {
            s: inst.system.matrix().clone(),
            kind,
            conjugator,
            a: inst.system.offset().clone(),
            system: inst.system,
            witness: inst.witness,
        }
    }
}

/// A matrix `S ∈ {T, T², T³}` (or, failing that, a conjugate of `T`) and an
/// offset `a` with `‖S⁻¹a‖ < 1` such that `S̄ₐ` is not distal.
pub fn conjugate_or_power_search(t: &Matrix) -> Result<SearchResult> {
    linalg::check_square(t)?;
    for k in 1..=3u32 {
        let s = linalg::matrix_power(t, k);
        if let Some(inst) = construct_nondistal_instance(&s)? {
            return Ok(SearchResult::from_instance(inst, SearchKind::Power(k), None));
        }
    }
    conjugate_search(t)
}

/// Orthonormal completion of a plane frame to a basis of ℝⁿ, frame first.
fn completed_basis(plane: &PlaneFrame) -> Matrix {
    let n = plane.dim();
    let mut vectors = vec![
        Vector::from_column_slice(&plane.w1),
        Vector::from_column_slice(&plane.w2),
    ];
    vectors.extend((0..n).map(|i| {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        e
    }));
    let ortho = linalg::orthonormalize(&vectors);
    Matrix::from_columns(&ortho[..n])
}

/// Conjugate mode.
///
/// On the plane of a complex pair `t e^{±iθ}` the block of `T` is
/// `V · t R(−θ) · V⁻¹`. Conjugating by `K V⁻¹` with `K = diag(k, 1/k)` gives
/// `t [[c, s k²], [−s/k², c]]`, whose inverse has symmetric part with top
/// eigenvalue `(c + |s|(k² − k⁻²)/2) / t`; `k` is chosen so that this is at
/// least `1/t`, and then a fixed point exists for a suitable offset whatever
/// the sign of `cos θ`.
pub fn conjugate_search(t: &Matrix) -> Result<SearchResult> {
    let n = linalg::check_square(t)?;
    linalg::invert(t)?;
    let values = linalg::eigenvalues(t)?;
    let Some(mu) = values.iter().copied().find(|e| e.im > 0.0) else {
        return construct_nondistal_instance(t)?
            .map(|inst| SearchResult::from_instance(inst, SearchKind::Conjugate, Some(Matrix::identity(n, n))))
            .ok_or_else(|| Error::SearchExhausted("no complex pair to conjugate and no direct instance".into()));
    };
    let plane = linalg::plane_for_complex(t, mu).ok_or(Error::PlaneNotFound)?;
    let q = completed_basis(&plane);
    let b = plane.restrict(t);

    // Real Jordan basis of the block: B [Re v, Im v] = [Re v, Im v] t R(−θ).
    let (p, r, s) = (b[(0, 0)], b[(0, 1)], b[(1, 1)]);
    let v = if r.abs() >= b[(1, 0)].abs() {
        [num_complex::Complex64::new(r, 0.0), mu - p]
    } else {
        [mu - s, num_complex::Complex64::new(b[(1, 0)], 0.0)]
    };
    let jordan = Matrix::from_row_slice(2, 2, &[v[0].re, v[0].im, v[1].re, v[1].im]);
    let jordan_inv = linalg::invert(&jordan)?;

    let (sin, cos) = (mu.im / mu.norm(), mu.re / mu.norm());
    let d = 2.0 * (cos.abs() + 1.0) / sin.abs();
    let k = ((d + (d * d + 4.0).sqrt()) / 2.0).sqrt();
    let scale = linalg::diag(&[k, 1.0 / k]);
    let mut dmat = Matrix::identity(n, n);
    dmat.view_mut((0, 0), (2, 2)).copy_from(&(scale * jordan_inv));
    let conj = &dmat * q.transpose();
    let conj_inv = linalg::invert(&conj)?;
    let s_mat = &conj * t * &conj_inv;

    let e12 = PlaneFrame { w1: unit(n, 0), w2: unit(n, 1) };
    let (a, x) = general_plane_fixed_point(&s_mat, &e12)?
        .ok_or_else(|| Error::InternalInconsistency("rescaled block has no positive direction".into()))?;
    let sys = AffineSphereSystem::build(s_mat.clone(), a.clone(), true)?;
    let witness = Witness::periodic_point(&AnySystem::Single(sys.clone()), &x, 1)?;
    let residual = witness.point().expect("point witness").residual;
    if residual > witness.tolerance {
        return Err(Error::SearchExhausted(format!("conjugate fixed point residual {residual:e}")));
    }
    Ok(SearchResult { s: s_mat, kind: SearchKind::Conjugate, conjugator: Some(conj), a, system: sys, witness })
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::verify;
    use crate::linalg::{block_diag, diag, rotation};
    use std::f64::consts::PI;

    #[test]
    fn third_power_of_obtuse_rotation() {
        let r = conjugate_or_power_search(&rotation(2.0 * PI / 3.0)).unwrap();
        assert_eq!(r.kind, SearchKind::Power(3));
        assert!(verify(&r.witness).unwrap().pass);
    }

    #[test]
    fn quarter_turn_squares_to_period_two() {
        let r = conjugate_or_power_search(&rotation(PI / 2.0)).unwrap();
        assert_eq!(r.kind, SearchKind::Power(2));
        assert_eq!(r.witness.point().unwrap().period, 2);
        assert!(verify(&r.witness).unwrap().pass);
    }

    #[test]
    fn conjugate_mode_handles_obtuse_rotation() {
        let t = rotation(2.0 * PI / 3.0);
        let r = conjugate_search(&t).unwrap();
        assert_eq!(r.kind, SearchKind::Conjugate);
        let p = r.conjugator.as_ref().unwrap();
        let back = p * &t * linalg::invert(p).unwrap();
        assert!((back - &r.s).amax() < 1e-10);
        assert!(r.system.is_certified());
        assert!(verify(&r.witness).unwrap().pass);
    }

    #[test]
    fn conjugate_mode_in_four_dimensions() {
        let t = block_diag(&[&(rotation(0.9 * PI) * 1.5), &diag(&[-0.7, 2.0])]);
        let r = conjugate_search(&t).unwrap();
        assert!(verify(&r.witness).unwrap().pass);
    }
}
