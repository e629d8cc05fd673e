//! Small dense real linear algebra for the matrices that drive the sphere maps.
//!
//! Dimensions here are tiny (2 to roughly 8), so the routines favour robustness
//! and determinism over asymptotic speed.

mod eigen;
mod subspace;

pub use eigen::{eigenvalues, sort_eigenvalues};
pub use subspace::{
    complex_null_vector, invariant_2plane, null_space, numerical_nullity, orthonormalize,
    plane_for_complex, plane_for_real_pair, spectrum, PlaneFrame, SpectralSummary,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Determinant threshold below which a matrix is treated as singular.
pub const TOL_SINGULAR: f64 = 1e-12;
/// Half-width of the band around modulus 1 that is neither contracting nor expanding.
pub const TOL_UNIT: f64 = 1e-9;
/// Relative singular-value threshold for numerical rank decisions.
pub const TOL_RANK: f64 = 1e-9;
/// Moduli within this distance of 1 are taken to be exactly 1 (rounding noise).
pub const TOL_UNIT_EXACT: f64 = 1e-11;

const NORM_MAX_ITERATIONS: usize = 10_000;
const NORM_REL_TOL: f64 = 1e-11;

/// Checks that `m` is square with dimension at least 2 and returns the dimension.
pub fn check_square(m: &Matrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidMatrix(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() < 2 {
        return Err(Error::InvalidMatrix("dimension must be at least 2".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    Ok(m.nrows())
}

/// Builds a matrix from row-major rows.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidMatrix("no rows".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidMatrix("ragged rows".into()));
    }
    Ok(DMatrix::from_fn(n, cols, |i, j| rows[i][j]))
}

/// Row-major copy of a matrix.
pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn diag(values: &[f64]) -> Matrix {
    Matrix::from_diagonal(&Vector::from_column_slice(values))
}

/// Counterclockwise rotation of the plane by `theta` radians.
pub fn rotation(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Block-diagonal assembly of square blocks.
pub fn block_diag(blocks: &[&Matrix]) -> Matrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(n, n);
    let mut offset = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((offset, offset), (k, k)).copy_from(b);
        offset += k;
    }
    out
}

pub fn matrix_power(m: &Matrix, k: u32) -> Matrix {
    let mut out = Matrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

pub fn determinant(m: &Matrix) -> f64 {
    m.clone().lu().determinant()
}

/// Inverse of an invertible square matrix.
pub fn invert(m: &Matrix) -> Result<Matrix> {
    check_square(m)?;
    let lu = m.clone().lu();
    let det = lu.determinant();
    if !(det.abs() > TOL_SINGULAR) {
        return Err(Error::SingularMatrix { det });
    }
    lu.try_inverse().ok_or(Error::SingularMatrix { det })
}

/// Largest singular value, by power iteration on `MᵀM`.
///
/// The iteration is seeded with a dominant column of `(MᵀM)^(2^k)` obtained by
/// repeated squaring, which removes the dependence of the iteration count on
/// the gap between the two largest singular values.
pub fn operator_norm(m: &Matrix) -> Result<f64> {
    let gram = m.transpose() * m;
    let n = gram.nrows();
    let scale = gram.amax();
    if scale == 0.0 {
        return Ok(0.0);
    }

    let mut squared = &gram / scale;
    for _ in 0..60 {
        let next = &squared * &squared;
        let s = next.amax();
        if s == 0.0 || !s.is_finite() {
            break;
        }
        squared = next / s;
    }
    let mut v = (0..n)
        .map(|j| squared.column(j).into_owned())
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .filter(|c| c.norm() > 0.0)
        .unwrap_or_else(|| Vector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.618_033_988_75).fract()));
    v.normalize_mut();

    for _ in 0..NORM_MAX_ITERATIONS {
        let w = &gram * &v;
        let rho = v.dot(&w);
        let residual = (&w - &v * rho).norm();
        if residual <= NORM_REL_TOL * rho.abs() || rho == 0.0 {
            return Ok(rho.max(0.0).sqrt());
        }
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(0.0);
        }
        v = w / wn;
    }
    Err(Error::ConvergenceFailure {
        what: "operator norm power iteration",
        iterations: NORM_MAX_ITERATIONS,
    })
}

/// Euclidean distance between two vectors.
pub fn distance(x: &Vector, y: &Vector) -> f64 {
    (x - y).norm()
}
