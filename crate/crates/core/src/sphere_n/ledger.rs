use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::sphere::{normalized, AffineSphereSystem};

/// Relative tolerance on `‖Ta − a‖` for a normalized system.
pub const TOL_NORMALIZED: f64 = 1e-8;

/// Coefficients with `T̄ₐᵐ(x) = (sₘ a + Tᵐx) / ‖sₘ a + Tᵐx‖` when `Ta = a`.
///
/// `s₁ = 1` and `sᵢ₊₁ = sᵢ + αᵢ` with `αᵢ = ‖sᵢ a + Tⁱx‖`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmLedger {
    /// `s₁, …, sₘ`.
    pub s: Vec<f64>,
    /// `α₁, …, αₘ₋₁`.
    pub alphas: Vec<f64>,
    /// Length of the component of `a` orthogonal to the contraction space.
    pub alpha0: f64,
    /// Unit direction of that component.
    pub a0: Vec<f64>,
    /// Largest `‖normalize(sᵢ a + Tⁱx) − T̄ₐⁱ(x)‖` over `i ≤ m`.
    pub closed_form_gap: f64,
}

impl SmLedger {
    pub fn m(&self) -> usize {
        self.s.len()
    }

    pub fn s_m(&self) -> f64 {
        *self.s.last().expect("m ≥ 1")
    }

    /// Checks `sₘ = 1 + Σαᵢ`, `sₘ ≥ 1 + (m−1)α₀` and the closed form.
    pub fn check(&self) -> Result<()> {
        let m = self.m();
        let sum = 1.0 + self.alphas.iter().sum::<f64>();
        if (sum - self.s_m()).abs() > 1e-12 * sum {
            return Err(Error::InternalInconsistency(format!("s_m = {} but 1 + Σα = {sum}", self.s_m())));
        }
        let floor = 1.0 + (m as f64 - 1.0) * self.alpha0;
        if self.s_m() < floor - 1e-8 {
            return Err(Error::InternalInconsistency(format!("s_m = {} below 1 + (m−1)α₀ = {floor}", self.s_m())));
        }
        if self.closed_form_gap > 1e-8 * m as f64 {
            return Err(Error::InternalInconsistency(format!(
                "closed form drifts {:e} from the iterated orbit",
                self.closed_form_gap
            )));
        }
        Ok(())
    }
}

/// The coefficient sequence `s₁..sₘ` for a normalized system (`Ta = a`).
pub fn sm_ledger(sys: &AffineSphereSystem, x: &Vector, m: usize) -> Result<SmLedger> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    let t = sys.matrix();
    let a = sys.offset();
    let alpha = a.norm();
    let residual = (t * a - a).norm();
    if alpha == 0.0 || residual > TOL_NORMALIZED * alpha {
        return Err(Error::NormalizationRequired { residual });
    }
    // Validates that x is a unit vector of the right dimension.
    sys.apply(x)?;

    let contraction = linalg::spectrum(t)?.contraction_vectors();
    let mut off = a.clone();
    for c in &contraction {
        off -= c * c.dot(a);
    }
    let alpha0 = off.norm();
    let a0 = if alpha0 > 0.0 { &off / alpha0 } else { off.clone() };

    let mut s = vec![1.0];
    let mut alphas = Vec::with_capacity(m.saturating_sub(1));
    let mut tx = t * x;
    let mut direct = sys.step(x)?;
    let mut gap = 0.0f64;
    for i in 1..=m {
        let si = s[i - 1];
        let v = a * si + &tx;
        gap = gap.max((normalized(&v)? - &direct).norm());
        if i == m {
            break;
        }
        let ai = v.norm();
        alphas.push(ai);
        s.push(si + ai);
        tx = t * &tx;
        direct = sys.step(&direct)?;
    }
    let ledger = SmLedger {
        s,
        alphas,
        alpha0,
        a0: a0.iter().copied().collect(),
        closed_form_gap: gap,
    };
    ledger.check()?;
    Ok(ledger)
}
