use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{
    check_square, determinant, eigenvalues, Matrix, Vector, TOL_RANK, TOL_SINGULAR, TOL_UNIT,
    TOL_UNIT_EXACT,
};
use crate::error::{Error, Result};

/// Relative gap below which two real eigenvalues are treated as one repeated root.
const REPEATED_ROOT_REL: f64 = 1e-7;

/// An orthonormal pair spanning a 2-plane of ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneFrame {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl PlaneFrame {
    pub fn new(w1: &Vector, w2: &Vector) -> Self {
        Self { w1: w1.iter().copied().collect(), w2: w2.iter().copied().collect() }
    }

    pub fn dim(&self) -> usize {
        self.w1.len()
    }

    /// The frame as an `n × 2` matrix with orthonormal columns.
    pub fn basis(&self) -> Matrix {
        let n = self.dim();
        Matrix::from_fn(n, 2, |i, j| if j == 0 { self.w1[i] } else { self.w2[i] })
    }

    /// Coordinates of `v` in the frame.
    pub fn coords(&self, v: &Vector) -> [f64; 2] {
        let b = self.basis();
        let c = b.transpose() * v;
        [c[0], c[1]]
    }

    pub fn embed(&self, u: [f64; 2]) -> Vector {
        Vector::from_fn(self.dim(), |i, _| u[0] * self.w1[i] + u[1] * self.w2[i])
    }

    /// Norm of the component of `v` orthogonal to the plane.
    pub fn off_plane(&self, v: &Vector) -> f64 {
        let [c1, c2] = self.coords(v);
        (v - self.embed([c1, c2])).norm()
    }

    /// `‖(I − P) M P‖_F` for the orthogonal projector `P` onto the plane; zero
    /// exactly when the plane is `M`-invariant.
    pub fn invariance_residual(&self, m: &Matrix) -> f64 {
        let b = self.basis();
        let mb = m * &b;
        let proj = &b * (b.transpose() * &mb);
        (mb - proj).norm()
    }

    /// The restriction `Bᵀ M B` of `M` to the plane, in frame coordinates.
    pub fn restrict(&self, m: &Matrix) -> Matrix {
        let b = self.basis();
        b.transpose() * m * b
    }
}

/// Spectral data of an invertible matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<Complex64>,
    pub dominant_modulus: f64,
    pub is_proximal: bool,
    /// Orthonormal basis of the contraction space (generalized eigenspaces with |λ| < 1).
    pub contraction_basis: Vec<Vec<f64>>,
    /// Orthonormal basis of the contraction space of the inverse (|λ| > 1).
    pub expansion_basis: Vec<Vec<f64>>,
    pub invariant_2planes: Vec<PlaneFrame>,
}

impl SpectralSummary {
    pub fn contraction_vectors(&self) -> Vec<Vector> {
        self.contraction_basis.iter().map(|v| Vector::from_column_slice(v)).collect()
    }

    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().filter(|e| e.im == 0.0).map(|e| e.re).collect()
    }

    /// Eigenvalues with positive imaginary part, one per conjugate pair.
    pub fn complex_pairs(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().filter(|e| e.im > 0.0).copied().collect()
    }
}

fn sorted_svd(m: &Matrix) -> (Vec<f64>, Matrix) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let vectors = Matrix::from_fn(m.ncols(), order.len(), |r, c| v_t[(order[c], r)]);
    (values, vectors)
}

/// The `k` right singular vectors of `m` with the smallest singular values.
pub fn null_space(m: &Matrix, k: usize) -> Vec<Vector> {
    let (_, vectors) = sorted_svd(m);
    (0..k.min(vectors.ncols())).map(|c| vectors.column(c).into_owned()).collect()
}

/// Number of singular values below `TOL_RANK · max(1, σ_max)`.
pub fn numerical_nullity(m: &Matrix) -> usize {
    let (values, _) = sorted_svd(m);
    let top = values.last().copied().unwrap_or(0.0).max(1.0);
    values.iter().filter(|&&s| s <= TOL_RANK * top).count()
}

/// Null vector of `M − λI` over ℂ, returned as its real and imaginary parts.
pub fn complex_null_vector(m: &Matrix, lambda: Complex64) -> (Vector, Vector) {
    let n = m.nrows();
    let shifted: DMatrix<Complex64> = DMatrix::from_fn(n, n, |i, j| {
        let v = Complex64::new(m[(i, j)], 0.0);
        if i == j {
            v - lambda
        } else {
            v
        }
    });
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let idx = (0..svd.singular_values.len())
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .unwrap_or(0);
    // Rows of Vᴴ are conjugated right singular vectors.
    let re = Vector::from_fn(n, |i, _| v_t[(idx, i)].re);
    let im = Vector::from_fn(n, |i, _| -v_t[(idx, i)].im);
    (re, im)
}

/// Modified Gram–Schmidt with re-orthogonalization; drops vectors that are
/// numerically dependent on the ones already kept.
pub fn orthonormalize(vectors: &[Vector]) -> Vec<Vector> {
    let mut out: Vec<Vector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let scale = v.norm();
        if scale == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &out {
                let c = q.dot(&w);
                w -= q * c;
            }
        }
        let n = w.norm();
        if n > 1e-10 * scale {
            out.push(w / n);
        }
    }
    out
}

fn frame_from(vectors: &[Vector]) -> Option<PlaneFrame> {
    let ortho = orthonormalize(vectors);
    (ortho.len() >= 2).then(|| PlaneFrame::new(&ortho[0], &ortho[1]))
}

/// Invariant plane spanned by the real and imaginary parts of an eigenvector
/// for the non-real eigenvalue `lambda`.
pub fn plane_for_complex(m: &Matrix, lambda: Complex64) -> Option<PlaneFrame> {
    let (re, im) = complex_null_vector(m, lambda);
    frame_from(&[re, im])
}

/// Invariant plane for a pair of real eigenvalues.
///
/// Distinct values give the span of the two eigenvectors. A repeated value
/// takes two directions of the eigenspace when it is at least 2-dimensional,
/// and otherwise the generalized eigenspace `ker (M − λI)²`.
pub fn plane_for_real_pair(m: &Matrix, l1: f64, l2: f64) -> Option<PlaneFrame> {
    let n = m.nrows();
    let id = Matrix::identity(n, n);
    if (l1 - l2).abs() > REPEATED_ROOT_REL * l1.abs().max(l2.abs()).max(1.0) {
        let v1 = null_space(&(m - &id * l1), 1).pop()?;
        let v2 = null_space(&(m - &id * l2), 1).pop()?;
        return frame_from(&[v1, v2]);
    }
    let lambda = 0.5 * (l1 + l2);
    let shifted = m - &id * lambda;
    if numerical_nullity(&shifted) >= 2 {
        return frame_from(&null_space(&shifted, 2));
    }
    let eigvec = null_space(&shifted, 1).pop()?;
    let generalized = null_space(&(&shifted * &shifted), 2);
    // The direction of the generalized eigenspace orthogonal to the eigenvector.
    let mut chain = None;
    for g in generalized {
        let w = &g - &eigvec * eigvec.dot(&g);
        if w.norm() > 1e-6 {
            chain = Some(w);
            break;
        }
    }
    frame_from(&[eigvec, chain?])
}

fn unit_class(modulus: f64) -> Result<std::cmp::Ordering> {
    let d = modulus - 1.0;
    if d.abs() <= TOL_UNIT_EXACT {
        Ok(std::cmp::Ordering::Equal)
    } else if d.abs() < TOL_UNIT {
        Err(Error::NearUnitModulusAmbiguity { modulus })
    } else if d < 0.0 {
        Ok(std::cmp::Ordering::Less)
    } else {
        Ok(std::cmp::Ordering::Greater)
    }
}

/// Real polynomial `∏ (M − λ)` over the selected eigenvalues, pairing
/// conjugates into quadratic factors.
fn spectral_polynomial(m: &Matrix, selected: &[Complex64]) -> Matrix {
    let n = m.nrows();
    let id = Matrix::identity(n, n);
    let mut out = id.clone();
    for e in selected {
        if e.im == 0.0 {
            out = &out * (m - &id * e.re);
        } else if e.im > 0.0 {
            let quad = m * m - m * (2.0 * e.re) + &id * e.norm_sqr();
            out = &out * quad;
        }
    }
    out
}

fn invariant_basis(m: &Matrix, all: &[Complex64], keep: impl Fn(f64) -> bool) -> Vec<Vector> {
    let n = m.nrows();
    let inside: Vec<Complex64> = all.iter().filter(|e| keep(e.norm())).copied().collect();
    let k = inside.len();
    if k == 0 {
        return Vec::new();
    }
    if k == n {
        return (0..n).map(|i| Vector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })).collect();
    }
    // ker ∏(M − λ) over the wanted eigenvalues (with multiplicity) is the sum
    // of their generalized eigenspaces; its dimension is the algebraic count `k`.
    let q = spectral_polynomial(m, &inside);
    orthonormalize(&null_space(&q, k))
}

/// Eigenvalues, proximality, contraction/expansion spaces and invariant planes.
pub fn spectrum(m: &Matrix) -> Result<SpectralSummary> {
    check_square(m)?;
    let det = determinant(m);
    if !(det.abs() > TOL_SINGULAR) {
        return Err(Error::SingularMatrix { det });
    }
    let values = eigenvalues(m)?;
    for e in &values {
        unit_class(e.norm())?;
    }

    let dominant_modulus = values.iter().map(|e| e.norm()).fold(0.0, f64::max);
    let at_top: Vec<&Complex64> = values
        .iter()
        .filter(|e| (e.norm() - dominant_modulus).abs() <= 1e-9 * dominant_modulus)
        .collect();
    let is_proximal = at_top.len() == 1 && at_top[0].im == 0.0;

    let contraction = invariant_basis(m, &values, |r| r < 1.0 - TOL_UNIT);
    let expansion = invariant_basis(m, &values, |r| r > 1.0 + TOL_UNIT);

    let mut planes = Vec::new();
    for e in values.iter().filter(|e| e.im > 0.0) {
        if let Some(p) = plane_for_complex(m, *e) {
            planes.push(p);
        }
    }
    let reals: Vec<f64> = values.iter().filter(|e| e.im == 0.0).map(|e| e.re).collect();
    let mut seen: Vec<(f64, f64)> = Vec::new();
    for i in 0..reals.len() {
        for j in (i + 1)..reals.len() {
            let key = (reals[i], reals[j]);
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            if let Some(p) = plane_for_real_pair(m, reals[i], reals[j]) {
                planes.push(p);
            }
        }
    }

    let to_vecs = |vs: Vec<Vector>| vs.into_iter().map(|v| v.iter().copied().collect()).collect();
    Ok(SpectralSummary {
        eigenvalues: values,
        dominant_modulus,
        is_proximal,
        contraction_basis: to_vecs(contraction),
        expansion_basis: to_vecs(expansion),
        invariant_2planes: planes,
    })
}

/// A canonical invariant 2-plane.
///
/// Complex-pair planes are preferred (smallest modulus first); otherwise the
/// plane of the two real eigenvalues of smallest modulus. For `n = 2` the
/// whole space is returned as `(e₁, e₂)`.
pub fn invariant_2plane(m: &Matrix) -> Result<PlaneFrame> {
    let n = check_square(m)?;
    if n == 2 {
        return Ok(PlaneFrame { w1: vec![1.0, 0.0], w2: vec![0.0, 1.0] });
    }
    let values = eigenvalues(m)?;
    if let Some(e) = values.iter().find(|e| e.im > 0.0) {
        if let Some(p) = plane_for_complex(m, *e) {
            return Ok(p);
        }
    }
    let reals: Vec<f64> = values.iter().filter(|e| e.im == 0.0).map(|e| e.re).collect();
    if reals.len() >= 2 {
        if let Some(p) = plane_for_real_pair(m, reals[0], reals[1]) {
            return Ok(p);
        }
    }
    Err(Error::InternalInconsistency("no invariant 2-plane could be extracted".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{block_diag, diag, matrix_power, rotation};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn spectrum_diagonal_example() {
        let s = spectrum(&diag(&[0.5, 2.0])).unwrap();
        assert!(s.is_proximal);
        assert_abs_diff_eq!(s.dominant_modulus, 2.0, epsilon = 1e-15);
        assert_eq!(s.contraction_basis.len(), 1);
        assert_abs_diff_eq!(s.contraction_basis[0][0].abs(), 1.0, epsilon = 1e-12);
        assert_eq!(s.expansion_basis.len(), 1);
    }

    #[test]
    fn spectrum_rotation_example() {
        let s = spectrum(&rotation(PI / 3.0)).unwrap();
        assert!(!s.is_proximal);
        assert!(s.contraction_basis.is_empty());
        assert!(s.expansion_basis.is_empty());
        assert_abs_diff_eq!(s.eigenvalues[1].arg(), PI / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn spectrum_jordan_example() {
        let j = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let s = spectrum(&j).unwrap();
        assert!(!s.is_proximal);
        assert_eq!(s.eigenvalues.len(), 2);
        assert!(s.eigenvalues.iter().all(|e| *e == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn spectrum_flags_near_unit_modulus() {
        let m = diag(&[1.0 + 5e-10, 3.0]);
        assert!(matches!(spectrum(&m), Err(Error::NearUnitModulusAmbiguity { .. })));
    }

    #[test]
    fn contraction_basis_is_invariant_and_contracting() {
        let m = Matrix::from_row_slice(3, 3, &[0.5, 1.0, 0.2, 0.0, 0.3, 0.7, 0.0, 0.0, 4.0]);
        let s = spectrum(&m).unwrap();
        assert_eq!(s.contraction_basis.len(), 2);
        let frame = PlaneFrame::new(&s.contraction_vectors()[0], &s.contraction_vectors()[1]);
        assert!(frame.invariance_residual(&m) < 1e-12);
        let restricted = frame.restrict(&m);
        let p = matrix_power(&restricted, 64);
        assert!(p.norm() < 1e-12);
    }

    #[test]
    fn invariant_plane_diag_prefers_small_moduli() {
        let m = diag(&[2.0, 3.0, 5.0]);
        let f = invariant_2plane(&m).unwrap();
        assert!(f.invariance_residual(&m) < 1e-8);
        // Frame lies in span{e1, e2}.
        assert_abs_diff_eq!(f.w1[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.w2[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn invariant_plane_prefers_complex_block() {
        let m = block_diag(&[&rotation(PI / 4.0), &diag(&[2.0, 3.0])]);
        let f = invariant_2plane(&m).unwrap();
        assert!(f.invariance_residual(&m) < 1e-8);
        for w in [&f.w1, &f.w2] {
            assert_abs_diff_eq!(w[2], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(w[3], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn invariant_plane_two_by_two_is_whole_space() {
        let f = invariant_2plane(&Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(f.w1, vec![1.0, 0.0]);
        assert_eq!(f.w2, vec![0.0, 1.0]);
    }

    #[test]
    fn repeated_eigenvalue_planes() {
        let m = diag(&[1.0, 1.0, 2.0]);
        let f = plane_for_real_pair(&m, 1.0, 1.0).unwrap();
        assert!(f.invariance_residual(&m) < 1e-12);

        let mut j = diag(&[0.5, 0.5, 3.0]);
        j[(0, 1)] = 1.0;
        let f = plane_for_real_pair(&j, 0.5, 0.5).unwrap();
        assert!(f.invariance_residual(&j) < 1e-8);
    }
}
