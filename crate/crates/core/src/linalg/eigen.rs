use nalgebra::linalg::Schur;
use num_complex::Complex64;

use super::{check_square, Matrix};
use crate::error::{Error, Result};

const SCHUR_TOL: f64 = 1e-12;
const SCHUR_MAX_SWEEPS: usize = 500;
/// Imaginary parts below this (relative) are rounding noise from a near-double real root.
const SNAP_REAL_REL: f64 = 1e-7;

/// Eigenvalues with algebraic multiplicity, sorted by modulus, then real part,
/// then imaginary part.
///
/// Dimensions 2 and 3 use the closed-form quadratic and cubic; larger matrices
/// go through a real Schur reduction (Hessenberg form plus shifted QR).
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>> {
    let n = check_square(m)?;
    let mut values = match n {
        2 => quadratic_roots(-(m[(0, 0)] + m[(1, 1)]), m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)])
            .to_vec(),
        3 => {
            let tr = m.trace();
            let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
                + m[(0, 0)] * m[(2, 2)]
                - m[(0, 2)] * m[(2, 0)]
                + m[(1, 1)] * m[(2, 2)]
                - m[(1, 2)] * m[(2, 1)];
            let det = m.clone().lu().determinant();
            cubic_roots(-tr, minors, -det).to_vec()
        }
        _ => {
            let schur = Schur::try_new(m.clone(), SCHUR_TOL, SCHUR_MAX_SWEEPS).ok_or(
                Error::ConvergenceFailure { what: "real Schur reduction", iterations: SCHUR_MAX_SWEEPS },
            )?;
            schur.complex_eigenvalues().iter().copied().collect()
        }
    };
    snap_near_real(&mut values);
    sort_eigenvalues(&mut values);
    Ok(values)
}

pub fn sort_eigenvalues(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        a.norm()
            .total_cmp(&b.norm())
            .then(a.re.total_cmp(&b.re))
            .then(a.im.total_cmp(&b.im))
    });
}

fn snap_near_real(values: &mut [Complex64]) {
    for v in values.iter_mut() {
        if v.im.abs() <= SNAP_REAL_REL * v.norm().max(1.0) {
            v.im = 0.0;
        }
    }
}

/// Roots of `x² + b x + c`.
fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    let noise = 64.0 * f64::EPSILON * (b * b + 4.0 * c.abs());
    if disc >= -noise {
        let disc = disc.max(0.0);
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        let (r1, r2) = (q, c / q);
        [Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, -im), Complex64::new(re, im)]
    }
}

/// Roots of `x³ + c2 x² + c1 x + c0`.
fn cubic_roots(c2: f64, c1: f64, c0: f64) -> [Complex64; 3] {
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let poly = |x: f64| ((x + c2) * x + c1) * x + c0;
    let dpoly = |x: f64| (3.0 * x + 2.0 * c2) * x + c1;
    let polish = |mut x: f64| {
        for _ in 0..4 {
            let d = dpoly(x);
            if d.abs() < 1e-300 {
                break;
            }
            let step = poly(x) / d;
            if !step.is_finite() || step.abs() > 1e-3 * (1.0 + x.abs()) {
                break;
            }
            x -= step;
        }
        x
    };

    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let scale = half_q * half_q + third_p.abs().powi(3);
    if p == 0.0 && q == 0.0 {
        let r = Complex64::new(-shift, 0.0);
        return [r; 3];
    }
    if disc > 16.0 * f64::EPSILON * scale {
        // One real root; the other two come from deflation.
        let u = (-half_q - half_q.signum() * disc.sqrt()).cbrt();
        let y = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        let r = polish(y - shift);
        let [z1, z2] = quadratic_roots(c2 + r, c1 + r * (c2 + r));
        [Complex64::new(r, 0.0), z1, z2]
    } else {
        let m = 2.0 * (-third_p).max(0.0).sqrt();
        let arg = if m == 0.0 { 0.0 } else { (3.0 * q / (p * m)).clamp(-1.0, 1.0) };
        let phi = arg.acos() / 3.0;
        let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
        let roots = [0.0, 1.0, 2.0].map(|k: f64| polish(m * (phi - two_pi_3 * k).cos() - shift));
        roots.map(|r| Complex64::new(r, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, rotation};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn diagonal_spectrum() {
        let ev = eigenvalues(&diag(&[0.5, 2.0])).unwrap();
        assert_eq!(ev, vec![Complex64::new(0.5, 0.0), Complex64::new(2.0, 0.0)]);
    }

    #[test]
    fn rotation_spectrum_is_unit_pair() {
        let ev = eigenvalues(&rotation(PI / 3.0)).unwrap();
        assert_abs_diff_eq!(ev[0].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ev[0].im, -(3f64.sqrt() / 2.0), epsilon = 1e-15);
        assert_abs_diff_eq!(ev[1].im, 3f64.sqrt() / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn jordan_block_double_root() {
        let j = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let ev = eigenvalues(&j).unwrap();
        assert_eq!(ev, vec![Complex64::new(1.0, 0.0); 2]);
    }

    #[test]
    fn cubic_three_real_roots() {
        let ev = eigenvalues(&diag(&[2.0, 3.0, 5.0])).unwrap();
        for (e, want) in ev.iter().zip([2.0, 3.0, 5.0]) {
            assert_abs_diff_eq!(e.re, want, epsilon = 1e-12);
            assert_eq!(e.im, 0.0);
        }
    }

    #[test]
    fn cubic_one_real_root() {
        let m = crate::linalg::block_diag(&[&(rotation(PI / 4.0) * 2.0), &diag(&[0.5])]);
        let ev = eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(ev[0].re, 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(ev[1].norm(), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ev[1].im, -(2f64.sqrt()), epsilon = 1e-13);
    }

    #[test]
    fn cubic_triple_root() {
        let ev = eigenvalues(&(Matrix::identity(3, 3) * -1.5)).unwrap();
        for e in ev {
            assert_abs_diff_eq!(e.re, -1.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn power_of_rotation_near_identity_is_real() {
        let r = rotation(2.0 * PI / 3.0);
        let ev = eigenvalues(&(&r * &r * &r)).unwrap();
        assert!(ev.iter().all(|e| e.im == 0.0));
        assert!(ev.iter().all(|e| (e.re - 1.0).abs() < 1e-7));
    }

    #[test]
    fn schur_path_for_dim_four() {
        let m = crate::linalg::block_diag(&[&rotation(PI / 4.0), &diag(&[2.0, 3.0])]);
        let ev = eigenvalues(&m).unwrap();
        assert_eq!(ev.len(), 4);
        assert_abs_diff_eq!(ev[0].norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[3].re, 3.0, epsilon = 1e-12);
    }
}
