//! The sphere map `T̄ₐ(x) = (a + Tx) / ‖a + Tx‖` on `Sⁿ ⊂ ℝⁿ⁺¹`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector, TOL_SINGULAR};

/// Systems with `‖T⁻¹a‖ ≥ 1 − TOL_BOUNDARY` are not certified as homeomorphisms.
pub const TOL_BOUNDARY: f64 = 1e-9;
/// Accepted deviation of an input point from the unit sphere.
pub const UNIT_INPUT_TOL: f64 = 1e-8;

/// Serialized form of a system: `{ "dim", "matrix" (row-major), "offset" }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDescription {
    pub dim: usize,
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

/// The map `T̄ₐ` together with its homeomorphism certificate.
///
/// Immutable after construction, so a system can be shared freely between
/// worker threads.
#[derive(Debug, Clone)]
pub struct AffineSphereSystem {
    matrix: Matrix,
    offset: Vector,
    inverse: Matrix,
    inverse_offset: Vector,
    inverse_offset_norm: f64,
    homeo_certified: bool,
}

impl AffineSphereSystem {
    /// Builds the system, certifying it when `‖T⁻¹a‖ < 1 − TOL_BOUNDARY`.
    pub fn build(matrix: Matrix, offset: Vector, require_homeo: bool) -> Result<Self> {
        let dim = linalg::check_square(&matrix)?;
        if offset.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: offset.len() });
        }
        if offset.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite offset".into()));
        }
        let inverse = linalg::invert(&matrix)?;
        let inverse_offset = &inverse * &offset;
        let inverse_offset_norm = inverse_offset.norm();
        let homeo_certified = inverse_offset_norm < 1.0 - TOL_BOUNDARY;
        if require_homeo && !homeo_certified {
            return Err(Error::HomeoConditionViolated { inverse_offset_norm });
        }
        Ok(Self { matrix, offset, inverse, inverse_offset, inverse_offset_norm, homeo_certified })
    }

    pub fn from_parts(matrix: &[Vec<f64>], offset: &[f64], require_homeo: bool) -> Result<Self> {
        Self::build(linalg::from_rows(matrix)?, Vector::from_column_slice(offset), require_homeo)
    }

    pub fn from_description(desc: &SystemDescription, require_homeo: bool) -> Result<Self> {
        if desc.matrix.len() != desc.dim {
            return Err(Error::DimensionMismatch { expected: desc.dim, got: desc.matrix.len() });
        }
        if let Some(row) = desc.matrix.iter().find(|r| r.len() != desc.dim) {
            return Err(Error::DimensionMismatch { expected: desc.dim, got: row.len() });
        }
        Self::from_parts(&desc.matrix, &desc.offset, require_homeo)
    }

    pub fn description(&self) -> SystemDescription {
        SystemDescription {
            dim: self.dim(),
            matrix: linalg::to_rows(&self.matrix),
            offset: self.offset.iter().copied().collect(),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn inverse_matrix(&self) -> &Matrix {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sphere_dim(&self) -> usize {
        self.dim() - 1
    }

    /// `α = ‖a‖`.
    pub fn alpha(&self) -> f64 {
        self.offset.norm()
    }

    pub fn inverse_offset_norm(&self) -> f64 {
        self.inverse_offset_norm
    }

    pub fn is_certified(&self) -> bool {
        self.homeo_certified
    }

    /// `a = 0`: the projective map `x ↦ Tx / ‖Tx‖`.
    pub fn is_projective(&self) -> bool {
        self.offset.iter().all(|&v| v == 0.0)
    }

    /// Recomputes `‖T⁻¹a‖` from scratch by solving `T z = a`.
    pub fn recompute_inverse_offset_norm(&self) -> f64 {
        self.matrix.clone().lu().solve(&self.offset).map(|z| z.norm()).unwrap_or(f64::INFINITY)
    }

    /// `T̄ₐ(x)` for a unit vector `x`.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_unit(x, self.dim())?;
        self.step(x)
    }

    /// `T̄ₐ(x)` without the unit-norm check on the input; the output is
    /// normalized, which also controls drift along long orbits.
    pub fn step(&self, x: &Vector) -> Result<Vector> {
        let mut y = &self.matrix * x;
        y += &self.offset;
        let norm = y.norm();
        if !(norm > TOL_SINGULAR) {
            return Err(Error::DegenerateImage { norm });
        }
        Ok(y / norm)
    }

    /// `T̄ₐ⁻¹(y) = T⁻¹(t y − a)` with `t > 0` the positive root of
    /// `‖T⁻¹y‖² t² − 2⟨T⁻¹y, T⁻¹a⟩ t + ‖T⁻¹a‖² − 1 = 0`.
    pub fn apply_inverse(&self, y: &Vector) -> Result<Vector> {
        check_unit(y, self.dim())?;
        self.step_inverse(y)
    }

    pub fn step_inverse(&self, y: &Vector) -> Result<Vector> {
        if !self.homeo_certified {
            return Err(Error::NotInvertible);
        }
        let u = &self.inverse * y;
        let (t, _) = positive_radial_root(&u, &self.inverse_offset);
        let x = u * t - &self.inverse_offset;
        let n = x.norm();
        Ok(x / n)
    }

    /// `T̄ₐⁿ(x)` for any integer `n`; negative `n` requires certification.
    pub fn iterate(&self, x: &Vector, n: i64) -> Result<Vector> {
        let mut p = x.clone();
        if n >= 0 {
            for _ in 0..n {
                p = self.step(&p)?;
            }
        } else {
            for _ in 0..(-n) {
                p = self.step_inverse(&p)?;
            }
        }
        Ok(p)
    }

    /// The orbit segment `{T̄ₐᵏ(x) : n_min ≤ k ≤ n_max}`.
    pub fn orbit(&self, x: &Vector, n_min: i64, n_max: i64) -> Result<OrbitSegment> {
        if n_min > 0 || n_max < 0 {
            return Err(Error::InvalidInput(format!(
                "orbit range [{n_min}, {n_max}] must contain 0"
            )));
        }
        if n_min < 0 && !self.homeo_certified {
            return Err(Error::NotInvertible);
        }
        check_unit(x, self.dim())?;
        let base = x / x.norm();

        let mut backward = Vec::with_capacity((-n_min) as usize);
        let mut p = base.clone();
        for _ in 0..(-n_min) {
            p = self.step_inverse(&p)?;
            backward.push(p.clone());
        }
        backward.reverse();

        let mut points = backward;
        let mut norm_factors = Vec::with_capacity(n_max as usize);
        let mut p = base.clone();
        points.push(p.clone());
        for _ in 0..n_max {
            let mut y = &self.matrix * &p;
            y += &self.offset;
            let norm = y.norm();
            if !(norm > TOL_SINGULAR) {
                return Err(Error::DegenerateImage { norm });
            }
            norm_factors.push(norm);
            p = y / norm;
            points.push(p.clone());
        }
        Ok(OrbitSegment {
            base_point: base.iter().copied().collect(),
            n_min,
            n_max,
            points,
            norm_factors,
        })
    }
}

/// Roots of `A t² − 2B t + C` with `A = ‖u‖²`, `B = ⟨u, w⟩`, `C = ‖w‖² − 1`,
/// returned as (positive root, other root). `C < 0` puts the roots on
/// opposite sides of zero.
fn positive_radial_root(u: &Vector, w: &Vector) -> (f64, f64) {
    let a = u.norm_squared();
    let b = u.dot(w);
    let c = w.norm_squared() - 1.0;
    let sq = (b * b - a * c).max(0.0).sqrt();
    if b >= 0.0 {
        let plus = (b + sq) / a;
        (plus, c / (a * plus))
    } else {
        let minus = (b - sq) / a;
        (c / (a * minus), minus)
    }
}

/// Returns both radial roots used by `apply_inverse` (positive root first).
pub fn inverse_radial_roots(sys: &AffineSphereSystem, y: &Vector) -> (f64, f64) {
    let u = &sys.inverse * y;
    positive_radial_root(&u, &sys.inverse_offset)
}

/// A finite piece of an orbit, indexed from `n_min` to `n_max`.
#[derive(Debug, Clone)]
pub struct OrbitSegment {
    pub base_point: Vec<f64>,
    pub n_min: i64,
    pub n_max: i64,
    pub points: Vec<Vector>,
    /// `‖a + T xₖ‖` for `k = 0 .. n_max − 1`.
    pub norm_factors: Vec<f64>,
}

impl OrbitSegment {
    /// The point with orbit index `k`.
    pub fn point(&self, k: i64) -> Option<&Vector> {
        if k < self.n_min || k > self.n_max {
            return None;
        }
        self.points.get((k - self.n_min) as usize)
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.n_min..=self.n_max
    }
}

fn check_unit(x: &Vector, dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
    }
    let norm = x.norm();
    if !((norm - 1.0).abs() <= UNIT_INPUT_TOL) {
        return Err(Error::NotUnitVector { norm });
    }
    Ok(())
}

/// Normalizes a nonzero vector.
pub fn normalized(v: &Vector) -> Result<Vector> {
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::NotUnitVector { norm: n });
    }
    Ok(v / n)
}

/// Product of `x` and `y` viewed as complex numbers `x₁ + i x₂`.
pub fn complex_mul(x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
    [x[0] * y[0] - x[1] * y[1], x[0] * y[1] + x[1] * y[0]]
}

/// Multiplicative inverse of a nonzero `x` viewed as a complex number.
pub fn complex_inv(x: [f64; 2]) -> [f64; 2] {
    let n2 = x[0] * x[0] + x[1] * x[1];
    [x[0] / n2, -x[1] / n2]
}

/// `‖T̄_{sa}ⁿ(s x) − s T̄ₐⁿ(x)‖` for a plane rotation `T` and unit complex `s`.
pub fn scalar_equivariance_check(
    t: &Matrix,
    a: [f64; 2],
    s: [f64; 2],
    x: [f64; 2],
    n: usize,
) -> Result<f64> {
    if t.nrows() != 2 || t.ncols() != 2 {
        return Err(Error::UnsupportedDimension { expected: 2, got: t.nrows() });
    }
    let orth = (t.transpose() * t - Matrix::identity(2, 2)).amax();
    if orth > 1e-12 || (linalg::determinant(t) - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidMatrix("expected a plane rotation".into()));
    }
    let base = AffineSphereSystem::build(t.clone(), Vector::from_column_slice(&a), true)?;
    let sa = complex_mul(s, a);
    let turned = AffineSphereSystem::build(t.clone(), Vector::from_column_slice(&sa), true)?;

    let x = Vector::from_column_slice(&x);
    let sx = Vector::from_column_slice(&complex_mul(s, [x[0], x[1]]));
    let lhs = turned.iterate(&sx, n as i64)?;
    let fx = base.iterate(&x, n as i64)?;
    let rhs = complex_mul(s, [fx[0], fx[1]]);
    Ok(((lhs[0] - rhs[0]).powi(2) + (lhs[1] - rhs[1]).powi(2)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, rotation};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn build_examples() {
        let s = AffineSphereSystem::build(Matrix::identity(2, 2), v(&[0.0, 0.5]), true).unwrap();
        assert!(s.is_certified());
        assert_abs_diff_eq!(s.inverse_offset_norm(), 0.5, epsilon = 1e-15);

        let err = AffineSphereSystem::build(rotation(0.7), v(&[1.2 * 0.6, 1.2 * 0.8]), true);
        assert!(matches!(err, Err(Error::HomeoConditionViolated { .. })));
        let uncert = AffineSphereSystem::build(rotation(0.7), v(&[0.72, 0.96]), false).unwrap();
        assert!(!uncert.is_certified());

        let s = AffineSphereSystem::build(diag(&[1.0, -2.0]), v(&[0.0, 3f64.sqrt()]), true).unwrap();
        assert_abs_diff_eq!(s.inverse_offset_norm(), 3f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn boundary_band_is_uncertified() {
        let s = AffineSphereSystem::build(Matrix::identity(2, 2), v(&[0.0, 1.0 - 1e-10]), false).unwrap();
        assert!(!s.is_certified());
    }

    #[test]
    fn apply_examples() {
        let s = AffineSphereSystem::build(Matrix::identity(2, 2), v(&[0.0, 0.5]), true).unwrap();
        assert_abs_diff_eq!(s.apply(&v(&[0.0, 1.0])).unwrap(), v(&[0.0, 1.0]), epsilon = 1e-15);

        let s = AffineSphereSystem::build(-Matrix::identity(2, 2), v(&[0.0, 0.6]), true).unwrap();
        assert_abs_diff_eq!(s.apply(&v(&[0.0, 1.0])).unwrap(), v(&[0.0, -1.0]), epsilon = 1e-15);

        // Attracting fixed point of the rotation by π/6 with a = (0, 0.6).
        let s = AffineSphereSystem::build(rotation(PI / 6.0), v(&[0.0, 0.6]), true).unwrap();
        let q = v(&[-0.5 / 0.6, (0.36f64 - 0.25).sqrt() / 0.6]);
        assert!((s.apply(&q).unwrap() - &q).norm() < 1e-12);
    }

    #[test]
    fn apply_rejects_bad_input() {
        let s = AffineSphereSystem::build(Matrix::identity(2, 2), v(&[0.0, 0.5]), true).unwrap();
        assert!(matches!(s.apply(&v(&[0.0, 2.0])), Err(Error::NotUnitVector { .. })));
        assert!(matches!(s.apply(&v(&[0.0, 1.0, 0.0])), Err(Error::DimensionMismatch { .. })));

        let u = AffineSphereSystem::build(Matrix::identity(2, 2), v(&[0.0, 1.0]), false).unwrap();
        assert!(matches!(u.apply(&v(&[0.0, -1.0])), Err(Error::DegenerateImage { .. })));
        assert!(matches!(u.apply_inverse(&v(&[0.0, 1.0])), Err(Error::NotInvertible)));
    }

    #[test]
    fn inverse_examples() {
        let p = AffineSphereSystem::build(Matrix::identity(3, 3), v(&[0.0, 0.0, 0.0]), true).unwrap();
        assert!(p.is_projective());
        let y = v(&[0.6, 0.0, 0.8]);
        assert_abs_diff_eq!(p.apply_inverse(&y).unwrap(), y, epsilon = 1e-15);

        let s = AffineSphereSystem::build(Matrix::identity(2, 2), v(&[0.0, 0.5]), true).unwrap();
        assert_abs_diff_eq!(s.apply_inverse(&v(&[0.0, 1.0])).unwrap(), v(&[0.0, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn radial_root_signs() {
        let s = AffineSphereSystem::build(diag(&[2.0, 0.5]), v(&[0.3, -0.2]), true).unwrap();
        for k in 0..50 {
            let phi = 0.13 * k as f64;
            let y = v(&[phi.cos(), phi.sin()]);
            let (plus, other) = inverse_radial_roots(&s, &y);
            assert!(plus > 0.0 && other <= 0.0);
            let x = s.inverse_matrix() * (&y * plus - s.offset());
            assert_abs_diff_eq!(x.norm(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn orbit_examples() {
        let s = AffineSphereSystem::build(Matrix::identity(2, 2), v(&[0.0, 0.5]), true).unwrap();
        let o = s.orbit(&v(&[1.0, 0.0]), 0, 0).unwrap();
        assert_eq!(o.points.len(), 1);
        assert!(o.norm_factors.is_empty());

        let o = s.orbit(&v(&[1.0, 0.0]), 0, 200).unwrap();
        assert!((o.point(200).unwrap() - v(&[0.0, 1.0])).norm() < 1e-6);
        assert_eq!(o.norm_factors.len(), 200);

        let o = s.orbit(&v(&[1.0, 0.0]), -10, 5).unwrap();
        assert_eq!(o.points.len(), 16);
        for k in -10..5 {
            let next = s.apply(o.point(k).unwrap()).unwrap();
            assert!((&next - o.point(k + 1).unwrap()).norm() < 1e-10);
        }

        let u = AffineSphereSystem::build(Matrix::identity(2, 2), v(&[0.0, 1.5]), false).unwrap();
        assert!(matches!(u.orbit(&v(&[1.0, 0.0]), -1, 0), Err(Error::NotInvertible)));
    }

    #[test]
    fn equivariance_examples() {
        let t = rotation(PI / 6.0);
        let r = scalar_equivariance_check(&t, [0.0, 0.6], [1.0, 0.0], [1.0, 0.0], 10).unwrap();
        assert_eq!(r, 0.0);
        let r = scalar_equivariance_check(&t, [0.0, 0.6], [0.0, 1.0], [1.0, 0.0], 10).unwrap();
        assert!(r < 1e-9);
        let x = [0.3f64.cos(), 0.3f64.sin()];
        let r = scalar_equivariance_check(&t, [0.0, 0.6], [-1.0, 0.0], x, 25).unwrap();
        assert!(r < 1e-9);
        assert!(scalar_equivariance_check(&diag(&[1.0, 2.0]), [0.0, 0.1], [1.0, 0.0], x, 1).is_err());
    }

    #[test]
    fn description_round_trip() {
        let s = AffineSphereSystem::build(diag(&[1.0, -2.0]), v(&[0.0, 0.5]), true).unwrap();
        let json = serde_json::to_string(&s.description()).unwrap();
        assert_eq!(json, r#"{"dim":2,"matrix":[[1.0,0.0],[0.0,-2.0]],"offset":[0.0,0.5]}"#);
        let back: SystemDescription = serde_json::from_str(&json).unwrap();
        let s2 = AffineSphereSystem::from_description(&back, true).unwrap();
        assert_eq!(s2.matrix(), s.matrix());
        let bad = SystemDescription { dim: 3, matrix: back.matrix.clone(), offset: back.offset.clone() };
        assert!(AffineSphereSystem::from_description(&bad, false).is_err());
    }
}
