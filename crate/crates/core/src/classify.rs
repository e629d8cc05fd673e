//! One-shot report on a single system: certification, periodic points and
//! distality/expansivity evidence.

use serde::Serialize;

use crate::certificate::{Witness, WitnessKind, DEFAULT_SEED};
use crate::circle::{
    self, fixed_points_numeric, involution_check, of_minimal_period, FixedPointRecord, InvolutionReport,
    NONDISTAL_SEPARATION, NONDISTAL_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::product::{
    product_distality_verdict, product_expansivity_verdict, AnySystem, DistalityVerdict, ExpansivityVerdict,
    ProductSphereSystem,
};
use crate::sphere::AffineSphereSystem;
use crate::sphere_n::{self, convergence_steps, TOL_NORMALIZED};

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Forward steps allowed for non-distal pairs (times the period).
    pub nondistal_horizon: u64,
    pub delta: f64,
    pub horizon: u64,
    pub seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { nondistal_horizon: 200, delta: 0.01, horizon: 500, seed: DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl From<&DistalityVerdict> for VerdictReport {
    fn from(v: &DistalityVerdict) -> Self {
        match v {
            DistalityVerdict::NonDistal(w) => Self { verdict: "NonDistal".into(), reason: None, witness: Some(w.clone()) },
            DistalityVerdict::Distal(r) => Self { verdict: "Distal".into(), reason: Some(r.clone()), witness: None },
            DistalityVerdict::Unknown(r) => Self { verdict: "Unknown".into(), reason: Some(r.clone()), witness: None },
        }
    }
}

impl From<&ExpansivityVerdict> for VerdictReport {
    fn from(v: &ExpansivityVerdict) -> Self {
        match v {
            ExpansivityVerdict::NonExpansive(w) => {
                Self { verdict: "NonExpansive".into(), reason: None, witness: Some(w.clone()) }
            }
            ExpansivityVerdict::Unknown(r) => Self { verdict: "Unknown".into(), reason: Some(r.clone()), witness: None },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassifyReport {
    pub dim: usize,
    pub homeo_certified: bool,
    pub inverse_offset_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub involution: Option<InvolutionReport>,
    pub fixed_points: Vec<FixedPointRecord>,
    pub period2_points: Vec<FixedPointRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periodic_note: Option<String>,
    pub distality: VerdictReport,
    pub expansivity: VerdictReport,
    #[serde(skip)]
    pub distality_verdict: Option<DistalityVerdict>,
    #[serde(skip)]
    pub expansivity_verdict: Option<ExpansivityVerdict>,
}

/// Distality evidence for a system of any dimension.
pub fn distality_verdict(sys: &AffineSphereSystem, horizon: u64) -> Result<DistalityVerdict> {
    if !sys.is_certified() {
        return Ok(DistalityVerdict::Unknown("not certified as a homeomorphism".into()));
    }
    if sys.dim() == 2 {
        return circle::nondistal_witness_circle(sys, horizon);
    }
    if let Some(w) = normalized_convergence(sys)? {
        return Ok(DistalityVerdict::NonDistal(w));
    }
    let plane = match sphere_n::plane_through_offset(sys) {
        Ok(p) => p,
        Err(Error::PlaneNotFound) => {
            return Ok(DistalityVerdict::Unknown("offset lies in no invariant plane".into()));
        }
        Err(e) => return Err(e),
    };
    let b = plane.restrict(sys.matrix());
    let a = Vector::from_column_slice(&plane.coords(sys.offset()));
    let restricted = AffineSphereSystem::build(b, a, true)?;
    match circle::nondistal_witness_circle(&restricted, horizon)? {
        DistalityVerdict::NonDistal(w) => {
            let d = w.pair().expect("circle pair witness");
            let x = plane.embed([d.x[0], d.x[1]]);
            let y = plane.embed([d.y[0], d.y[1]]);
            let full = Witness::converging_pair(
                WitnessKind::NonDistalPair,
                &AnySystem::Single(sys.clone()),
                &x,
                &y,
                d.steps,
                d.threshold,
                d.min_separation,
            )?;
            let fd = full.pair().expect("pair witness");
            if fd.claimed < fd.threshold {
                let full = match d.period {
                    Some(p) => full.with_period(p),
                    None => full,
                };
                return Ok(DistalityVerdict::NonDistal(full));
            }
            Ok(DistalityVerdict::Unknown("invariant-circle pair does not converge in the full sphere".into()))
        }
        DistalityVerdict::Distal(r) => Ok(DistalityVerdict::Unknown(format!("restriction to an invariant circle: {r}"))),
        DistalityVerdict::Unknown(r) => Ok(DistalityVerdict::Unknown(r)),
    }
}

/// For `Ta = a`, a contraction-space point converging to `ā`.
fn normalized_convergence(sys: &AffineSphereSystem) -> Result<Option<Witness>> {
    let t = sys.matrix();
    let a = sys.offset();
    let alpha = a.norm();
    if alpha == 0.0 || (t * a - a).norm() > TOL_NORMALIZED * alpha {
        return Ok(None);
    }
    let Ok(summary) = linalg::spectrum(t) else {
        return Ok(None);
    };
    let Some(mut x) = summary.contraction_vectors().into_iter().next() else {
        return Ok(None);
    };
    let bar = a / alpha;
    if x.dot(&bar) > 0.0 {
        x = -x;
    }
    let Some(steps) = convergence_steps(sys, &x, &bar, NONDISTAL_THRESHOLD)? else {
        return Ok(None);
    };
    let w = Witness::converging_pair(
        WitnessKind::ConvergenceToPoint,
        &AnySystem::Single(sys.clone()),
        &x,
        &bar,
        steps,
        NONDISTAL_THRESHOLD,
        NONDISTAL_SEPARATION,
    )?;
    Ok(Some(w.with_period(1)))
}

/// Non-expansivity evidence for a system of any dimension.
pub fn expansivity_verdict(sys: &AffineSphereSystem, opts: &ClassifyOptions) -> Result<ExpansivityVerdict> {
    if !sys.is_certified() {
        return Ok(ExpansivityVerdict::Unknown("not certified as a homeomorphism".into()));
    }
    let found = match sphere_n::nonexpansive_witness_seeded(sys, opts.delta, opts.horizon, opts.seed) {
        Err(Error::PlaneNotFound) => {
            sphere_n::nonexpansive_witness_anywhere(sys, opts.delta, opts.horizon, opts.seed)
        }
        other => other,
    };
    match found {
        Ok(w) => Ok(ExpansivityVerdict::NonExpansive(w)),
        Err(Error::WitnessNotFound(r)) => Ok(ExpansivityVerdict::Unknown(r)),
        Err(e) => Err(e),
    }
}

pub fn classify(sys: &AffineSphereSystem, opts: &ClassifyOptions) -> Result<ClassifyReport> {
    let certified = sys.is_certified();
    let mut involution = None;
    let mut fixed_points = Vec::new();
    let mut period2_points = Vec::new();
    let mut periodic_note = None;
    if sys.dim() == 2 && certified {
        involution = Some(involution_check(sys)?);
        match fixed_points_numeric(sys, 1) {
            Ok(r) => fixed_points = r,
            Err(Error::IdenticallyPeriodic { .. }) => periodic_note = Some("identity map: every point is fixed".into()),
            Err(e) => return Err(e),
        }
        match fixed_points_numeric(sys, 2) {
            Ok(r) => period2_points = of_minimal_period(&r, 2),
            Err(Error::IdenticallyPeriodic { .. }) => {
                periodic_note.get_or_insert_with(|| "second iterate is the identity".into());
            }
            Err(e) => return Err(e),
        }
    } else if sys.dim() == 2 {
        periodic_note = Some("periodic points are only scanned for certified systems".into());
    }
    let dv = distality_verdict(sys, opts.nondistal_horizon)?;
    let ev = expansivity_verdict(sys, opts)?;
    Ok(ClassifyReport {
        dim: sys.dim(),
        homeo_certified: certified,
        inverse_offset_norm: sys.inverse_offset_norm(),
        involution,
        fixed_points,
        period2_points,
        periodic_note,
        distality: (&dv).into(),
        expansivity: (&ev).into(),
        distality_verdict: Some(dv),
        expansivity_verdict: Some(ev),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductReport {
    pub factors: Vec<ClassifyReport>,
    pub homeo_certified: bool,
    pub distality: VerdictReport,
    pub expansivity: VerdictReport,
}

/// Classifies each factor and combines the verdicts; a single factor
/// reports exactly as the factor itself.
pub fn classify_product(p: &ProductSphereSystem, opts: &ClassifyOptions) -> Result<ProductReport> {
    let factors: Vec<ClassifyReport> = p.factors().iter().map(|f| classify(f, opts)).collect::<Result<_>>()?;
    let dvs: Vec<DistalityVerdict> = factors.iter().map(|r| r.distality_verdict.clone().expect("set")).collect();
    let evs: Vec<ExpansivityVerdict> = factors.iter().map(|r| r.expansivity_verdict.clone().expect("set")).collect();
    let (distality, expansivity) = if factors.len() == 1 {
        (factors[0].distality.clone(), factors[0].expansivity.clone())
    } else {
        (
            (&product_distality_verdict(p, &dvs)?).into(),
            (&product_expansivity_verdict(p, &evs)?).into(),
        )
    };
    Ok(ProductReport { homeo_certified: p.is_certified(), factors, distality, expansivity })
}
