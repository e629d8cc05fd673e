//! Block-diagonal systems on products of spheres, with the max-metric.

use serde::{Deserialize, Serialize};

use crate::certificate::{PairData, Witness, WitnessData, WitnessKind, WitnessSystem};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::sphere::{AffineSphereSystem, SystemDescription};

/// Serialized form: `{ "factors": [system, ...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDescription {
    pub factors: Vec<SystemDescription>,
}

/// `T̄ᵤ = (T̄₁)_{u₁} × … × (T̄ₙ)_{uₙ}` acting factor-wise.
#[derive(Debug, Clone)]
pub struct ProductSphereSystem {
    factors: Vec<AffineSphereSystem>,
    block_matrix: Matrix,
    offset: Vector,
    starts: Vec<usize>,
}

impl ProductSphereSystem {
    pub fn assemble(factors: Vec<AffineSphereSystem>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::EmptyProduct);
        }
        let blocks: Vec<&Matrix> = factors.iter().map(|f| f.matrix()).collect();
        let block_matrix = linalg::block_diag(&blocks);
        let mut starts = Vec::with_capacity(factors.len());
        let mut offset = Vec::new();
        for f in &factors {
            starts.push(offset.len());
            offset.extend(f.offset().iter().copied());
        }
        Ok(Self { factors, block_matrix, offset: Vector::from_vec(offset), starts })
    }

    pub fn from_description(desc: &ProductDescription, require_homeo: bool) -> Result<Self> {
        let factors = desc
            .factors
            .iter()
            .map(|d| AffineSphereSystem::from_description(d, require_homeo))
            .collect::<Result<Vec<_>>>()?;
        Self::assemble(factors)
    }

    pub fn description(&self) -> ProductDescription {
        ProductDescription { factors: self.factors.iter().map(|f| f.description()).collect() }
    }

    pub fn factors(&self) -> &[AffineSphereSystem] {
        &self.factors
    }

    /// `N = Σ (iₖ + 1)`.
    pub fn total_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn block_matrix(&self) -> &Matrix {
        &self.block_matrix
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    /// A homeomorphism iff every factor is.
    pub fn is_certified(&self) -> bool {
        self.factors.iter().all(|f| f.is_certified())
    }

    /// Recovers `(Tₖ, uₖ)` from the assembled block matrix and offset.
    pub fn split(&self) -> Vec<(Matrix, Vector)> {
        self.factors
            .iter()
            .zip(&self.starts)
            .map(|(f, &s)| {
                let k = f.dim();
                (
                    self.block_matrix.view((s, s), (k, k)).into_owned(),
                    self.offset.rows(s, k).into_owned(),
                )
            })
            .collect()
    }

    /// Splits a concatenated point of `ℝᴺ` into its factor components.
    pub fn components(&self, v: &Vector) -> Result<Vec<Vector>> {
        if v.len() != self.total_dim() {
            return Err(Error::DimensionMismatch { expected: self.total_dim(), got: v.len() });
        }
        Ok(self
            .factors
            .iter()
            .zip(&self.starts)
            .map(|(f, &s)| v.rows(s, f.dim()).into_owned())
            .collect())
    }

    pub fn concat(parts: &[Vector]) -> Vector {
        Vector::from_iterator(parts.iter().map(|p| p.len()).sum(), parts.iter().flat_map(|p| p.iter().copied()))
    }

    /// Applies each factor to its own component.
    pub fn product_apply(&self, v: &[Vector]) -> Result<Vec<Vector>> {
        if v.len() != self.factors.len() {
            return Err(Error::DimensionMismatch { expected: self.factors.len(), got: v.len() });
        }
        self.factors.iter().zip(v).map(|(f, x)| f.apply(x)).collect()
    }

    pub fn step(&self, v: &Vector) -> Result<Vector> {
        let parts = self.components(v)?;
        let out = self.factors.iter().zip(&parts).map(|(f, x)| f.step(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self::concat(&out))
    }

    pub fn step_inverse(&self, v: &Vector) -> Result<Vector> {
        let parts = self.components(v)?;
        let out = self
            .factors
            .iter()
            .zip(&parts)
            .map(|(f, x)| f.step_inverse(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::concat(&out))
    }

    /// Max over factors of the Euclidean distance between components.
    pub fn distance(&self, v: &Vector, w: &Vector) -> Result<f64> {
        let (a, b) = (self.components(v)?, self.components(w)?);
        Ok(a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
    }
}

/// A single system or a product, as replayed by the verifier.
#[derive(Debug, Clone)]
pub enum AnySystem {
    Single(AffineSphereSystem),
    Product(ProductSphereSystem),
}

impl AnySystem {
    pub fn from_witness_system(sys: &WitnessSystem) -> Result<Self> {
        Ok(match sys {
            WitnessSystem::Single(d) => Self::Single(AffineSphereSystem::from_description(d, false)?),
            WitnessSystem::Product(p) => Self::Product(ProductSphereSystem::from_description(p, false)?),
        })
    }

    pub fn to_witness_system(&self) -> WitnessSystem {
        match self {
            Self::Single(s) => WitnessSystem::Single(s.description()),
            Self::Product(p) => WitnessSystem::Product(p.description()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Single(s) => s.dim(),
            Self::Product(p) => p.total_dim(),
        }
    }

    pub fn is_certified(&self) -> bool {
        match self {
            Self::Single(s) => s.is_certified(),
            Self::Product(p) => p.is_certified(),
        }
    }

    pub fn step(&self, v: &Vector) -> Result<Vector> {
        match self {
            Self::Single(s) => s.step(v),
            Self::Product(p) => p.step(v),
        }
    }

    pub fn step_inverse(&self, v: &Vector) -> Result<Vector> {
        match self {
            Self::Single(s) => s.step_inverse(v),
            Self::Product(p) => p.step_inverse(v),
        }
    }

    pub fn distance(&self, v: &Vector, w: &Vector) -> Result<f64> {
        match self {
            Self::Single(_) => Ok((v - w).norm()),
            Self::Product(p) => p.distance(v, w),
        }
    }

    /// Checks the dimension and that every sphere component is a unit vector.
    pub fn check_point(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let parts = match self {
            Self::Single(_) => vec![v.clone()],
            Self::Product(p) => p.components(v)?,
        };
        for c in parts {
            let norm = c.norm();
            if !((norm - 1.0).abs() <= crate::sphere::UNIT_INPUT_TOL) {
                return Err(Error::NotUnitVector { norm });
            }
        }
        Ok(())
    }
}

/// Per-factor distality evidence.
#[derive(Debug, Clone)]
pub enum DistalityVerdict {
    NonDistal(Witness),
    Distal(String),
    Unknown(String),
}

/// Per-factor expansivity evidence; expansivity itself is never affirmed.
#[derive(Debug, Clone)]
pub enum ExpansivityVerdict {
    NonExpansive(Witness),
    Unknown(String),
}

/// Composition law for distality: any non-distal factor makes the product
/// non-distal, and the product is distal when every factor is.
pub fn product_distality_verdict(
    p: &ProductSphereSystem,
    factor_verdicts: &[DistalityVerdict],
) -> Result<DistalityVerdict> {
    check_verdict_count(p, factor_verdicts.len())?;
    for (k, v) in factor_verdicts.iter().enumerate() {
        if let DistalityVerdict::NonDistal(w) = v {
            return Ok(DistalityVerdict::NonDistal(lift_witness(p, k, w)?));
        }
    }
    if factor_verdicts.iter().all(|v| matches!(v, DistalityVerdict::Distal(_))) {
        return Ok(DistalityVerdict::Distal("every factor is distal".into()));
    }
    Ok(DistalityVerdict::Unknown("no factor is known to be non-distal".into()))
}

/// Composition law for expansivity: one non-expansive factor suffices.
pub fn product_expansivity_verdict(
    p: &ProductSphereSystem,
    factor_verdicts: &[ExpansivityVerdict],
) -> Result<ExpansivityVerdict> {
    check_verdict_count(p, factor_verdicts.len())?;
    for (k, v) in factor_verdicts.iter().enumerate() {
        if let ExpansivityVerdict::NonExpansive(w) = v {
            return Ok(ExpansivityVerdict::NonExpansive(lift_witness(p, k, w)?));
        }
    }
    Ok(ExpansivityVerdict::Unknown("no factor is known to be non-expansive".into()))
}

fn check_verdict_count(p: &ProductSphereSystem, got: usize) -> Result<()> {
    if got != p.factors().len() {
        return Err(Error::DimensionMismatch { expected: p.factors().len(), got });
    }
    Ok(())
}

/// Base point held in a non-witness coordinate: a fixed point when one is
/// readily available, else `e₁`.
pub fn resting_point(sys: &AffineSphereSystem) -> Vector {
    if sys.dim() == 2 && sys.is_certified() {
        if let Ok(points) = crate::circle::fixed_points_numeric(sys, 1) {
            if let Some(p) = points.first() {
                return Vector::from_column_slice(&p.point);
            }
        }
    }
    let mut e1 = Vector::zeros(sys.dim());
    e1[0] = 1.0;
    e1
}

/// Embeds a factor pair witness into coordinate `k` of the product; every
/// other coordinate carries the same base point in both members of the pair.
pub fn lift_witness(p: &ProductSphereSystem, k: usize, w: &Witness) -> Result<Witness> {
    let factor = p.factors().get(k).ok_or(Error::DimensionMismatch {
        expected: p.factors().len(),
        got: k + 1,
    })?;
    if !matches!(w.system, WitnessSystem::Single(_)) {
        return Err(Error::UnliftableWitness("factor witness must be on a single system".into()));
    }
    let rest: Vec<Vector> = p.factors().iter().map(resting_point).collect();
    let lift = |x: &[f64]| -> Result<Vec<f64>> {
        if x.len() != factor.dim() {
            return Err(Error::MalformedWitness("point dimension differs from factor".into()));
        }
        let mut parts = rest.clone();
        parts[k] = Vector::from_column_slice(x);
        Ok(ProductSphereSystem::concat(&parts).iter().copied().collect())
    };
    let lift_pair = |d: &PairData| -> Result<PairData> {
        Ok(PairData { x: lift(&d.x)?, y: lift(&d.y)?, ..d.clone() })
    };
    let data = match (&w.kind, &w.data) {
        (WitnessKind::NonDistalPair, WitnessData::Pair(d))
        | (WitnessKind::NonExpansivePair, WitnessData::Pair(d))
        | (WitnessKind::ConvergenceToPoint, WitnessData::Pair(d)) => WitnessData::Pair(lift_pair(d)?),
        _ => {
            return Err(Error::UnliftableWitness(format!(
                "{} witnesses carry no point pair",
                w.kind.as_str()
            )))
        }
    };
    Ok(Witness {
        kind: w.kind,
        system: WitnessSystem::Product(p.description()),
        data,
        tolerance: w.tolerance,
        seed: w.seed,
    })
}
