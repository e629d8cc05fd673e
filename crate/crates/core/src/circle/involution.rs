use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::AffineSphereSystem;

use super::closed_form::{offset_eigenvalue, TOL_ALIGN};
use super::kernel::{dist2, norm2, point_at};
use super::check_circle_system;

pub const INVOLUTION_SAMPLES: usize = 1000;
const TOL_INVOLUTION: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvolutionReport {
    pub is_involution: bool,
    /// `a` is an eigenvector for a real negative eigenvalue `λ₁`.
    pub condition_i: bool,
    /// `λ₂ ≠ λ₁` and the `λ₂`-eigenvector is orthogonal to `a`.
    pub condition_ii: bool,
    /// `λ₁² = ‖a‖² + λ₂²`.
    pub condition_iii: bool,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    /// `max ‖T̄ₐ²(x) − x‖` over the sampled points.
    pub max_residual: f64,
    pub samples: usize,
}

/// Decides whether `T̄ₐ² = Id` both from the eigenstructure of `T` and by
/// sampling 1000 equispaced points.
pub fn involution_check(sys: &AffineSphereSystem) -> Result<InvolutionReport> {
    involution_check_with(sys, INVOLUTION_SAMPLES)
}

pub fn involution_check_with(sys: &AffineSphereSystem, samples: usize) -> Result<InvolutionReport> {
    let map = check_circle_system(sys)?;
    let t = map.matrix();
    let a = map.offset();
    let alpha = norm2(a);

    let lambda1 = offset_eigenvalue(&map).filter(|&l| l < 0.0);
    let condition_i = lambda1.is_some();
    let mut lambda2 = None;
    let mut condition_ii = false;
    let mut condition_iii = false;
    if let Some(l1) = lambda1 {
        let l2 = t[0][0] + t[1][1] - l1;
        lambda2 = Some(l2);
        if (l2 - l1).abs() > TOL_INVOLUTION * l1.abs().max(1.0) {
            // The image of T − λ₁ is the λ₂-eigenspace.
            let cols = [[t[0][0] - l1, t[1][0]], [t[0][1], t[1][1] - l1]];
            let v = if norm2(cols[0]) >= norm2(cols[1]) { cols[0] } else { cols[1] };
            let cos = (v[0] * a[0] + v[1] * a[1]).abs() / (norm2(v) * alpha);
            condition_ii = cos <= TOL_ALIGN;
        }
        condition_iii = (l1 * l1 - alpha * alpha - l2 * l2).abs() <= TOL_INVOLUTION * (l1 * l1).max(1.0);
    }
    let spectral = condition_i && condition_ii && condition_iii;

    let max_residual = (0..samples)
        .map(|k| {
            let x = point_at(TAU * k as f64 / samples as f64);
            dist2(map.apply(map.apply(x)), x)
        })
        .fold(0.0, f64::max);
    let sampled = max_residual < TOL_INVOLUTION;
    if spectral != sampled {
        return Err(Error::InternalInconsistency(format!(
            "spectral involution test says {spectral}, sampled residual {max_residual:e}"
        )));
    }
    Ok(InvolutionReport {
        is_involution: spectral,
        condition_i,
        condition_ii,
        condition_iii,
        lambda1,
        lambda2,
        max_residual,
        samples,
    })
}
