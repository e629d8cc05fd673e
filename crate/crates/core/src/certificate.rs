//! Replayable evidence for the verdicts produced by the toolkit, and an
//! independent verifier that re-runs the orbits from scratch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::product::{AnySystem, ProductDescription};
use crate::sphere::SystemDescription;

/// Default seed for sampled checks.
pub const DEFAULT_SEED: u64 = 42;
/// Residual tolerance attached to fixed-point, periodic and involution witnesses.
pub const TOL_FIXED_POINT: f64 = 1e-9;
/// Replay slack attached to pair witnesses.
pub const TOL_REPLAY: f64 = 1e-9;
/// Smallest initial separation any pair witness may claim.
pub const MIN_PAIR_SEPARATION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WitnessKind {
    FixedPoint,
    PeriodicOrbit,
    Involution,
    NonDistalPair,
    NonExpansivePair,
    ConvergenceToPoint,
}

impl WitnessKind {
    pub const ALL: [WitnessKind; 6] = [
        Self::FixedPoint,
        Self::PeriodicOrbit,
        Self::Involution,
        Self::NonDistalPair,
        Self::NonExpansivePair,
        Self::ConvergenceToPoint,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FixedPoint => "FixedPoint",
            Self::PeriodicOrbit => "PeriodicOrbit",
            Self::Involution => "Involution",
            Self::NonDistalPair => "NonDistalPair",
            Self::NonExpansivePair => "NonExpansivePair",
            Self::ConvergenceToPoint => "ConvergenceToPoint",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::MalformedWitness(format!("unknown kind {s:?}")))
    }
}

/// The system a witness lives on. A product is recognized by its `factors` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WitnessSystem {
    Product(ProductDescription),
    Single(SystemDescription),
}

/// A fixed point (`period = 1`) or a point of minimal period `period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointData {
    pub point: Vec<f64>,
    pub period: u32,
    /// `‖T̄ᵖ(x) − x‖`.
    pub residual: f64,
    /// `min_{0<j<p} ‖T̄ʲ(x) − x‖`; zero for fixed points.
    pub return_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvolutionData {
    pub samples: usize,
    /// `max ‖T̄²(x) − x‖` over the sampled points.
    pub max_residual: f64,
}

/// Two points whose orbits come (and for non-expansive pairs, stay) close.
///
/// For `NonDistalPair` and `ConvergenceToPoint` the claim is the distance
/// after `steps` forward iterates; for `NonExpansivePair` it is the supremum
/// over all `|n| ≤ steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub steps: u64,
    pub separation: f64,
    pub min_separation: f64,
    pub claimed: f64,
    pub threshold: f64,
    /// Period of the periodic point the pair is attracted to, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<u32>,
    /// Eigenvalue `λ` that `T` was divided by to build the system, when the
    /// system is a normalized version of a user matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WitnessData {
    Point(PointData),
    Involution(InvolutionData),
    Pair(PairData),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WitnessJson", into = "WitnessJson")]
pub struct Witness {
    pub kind: WitnessKind,
    pub system: WitnessSystem,
    pub data: WitnessData,
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct WitnessJson {
    kind: String,
    system: WitnessSystem,
    data: serde_json::Value,
    tolerance: f64,
    seed: String,
}

impl From<Witness> for WitnessJson {
    fn from(w: Witness) -> Self {
        let data = match &w.data {
            WitnessData::Point(d) => serde_json::to_value(d),
            WitnessData::Involution(d) => serde_json::to_value(d),
            WitnessData::Pair(d) => serde_json::to_value(d),
        }
        .expect("witness payloads serialize");
        WitnessJson {
            kind: w.kind.as_str().to_string(),
            system: w.system,
            data,
            tolerance: w.tolerance,
            seed: w.seed.to_string(),
        }
    }
}

impl TryFrom<WitnessJson> for Witness {
    type Error = Error;

    fn try_from(j: WitnessJson) -> Result<Self> {
        let kind = WitnessKind::parse(&j.kind)?;
        let bad = |e: serde_json::Error| Error::MalformedWitness(e.to_string());
        let data = match kind {
            WitnessKind::FixedPoint | WitnessKind::PeriodicOrbit => {
                WitnessData::Point(serde_json::from_value(j.data).map_err(bad)?)
            }
            WitnessKind::Involution => WitnessData::Involution(serde_json::from_value(j.data).map_err(bad)?),
            _ => WitnessData::Pair(serde_json::from_value(j.data).map_err(bad)?),
        };
        let seed = j
            .seed
            .parse()
            .map_err(|_| Error::MalformedWitness(format!("seed {:?} is not a u64", j.seed)))?;
        Ok(Witness { kind, system: j.system, data, tolerance: j.tolerance, seed })
    }
}

impl Witness {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witnesses serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::MalformedWitness(e.to_string()))
    }

    pub fn pair(&self) -> Option<&PairData> {
        match &self.data {
            WitnessData::Pair(p) => Some(p),
            _ => None,
        }
    }

    pub fn point(&self) -> Option<&PointData> {
        match &self.data {
            WitnessData::Point(p) => Some(p),
            _ => None,
        }
    }

    /// A fixed point (`period = 1`) or periodic point witness.
    pub fn periodic_point(sys: &AnySystem, point: &Vector, period: u32) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidInput("period must be positive".into()));
        }
        sys.check_point(point)?;
        let (residual, return_gap) = periodic_residuals(sys, point, period)?;
        let kind = if period == 1 { WitnessKind::FixedPoint } else { WitnessKind::PeriodicOrbit };
        Ok(Self {
            kind,
            system: sys.to_witness_system(),
            data: WitnessData::Point(PointData {
                point: point.iter().copied().collect(),
                period,
                residual,
                return_gap,
            }),
            tolerance: TOL_FIXED_POINT,
            seed: DEFAULT_SEED,
        })
    }

    pub fn involution(sys: &AnySystem, samples: usize, seed: u64) -> Result<Self> {
        let max_residual = involution_residual(sys, samples, seed)?;
        Ok(Self {
            kind: WitnessKind::Involution,
            system: sys.to_witness_system(),
            data: WitnessData::Involution(InvolutionData { samples, max_residual }),
            tolerance: TOL_FIXED_POINT,
            seed,
        })
    }

    /// Pair whose orbits are `claimed` apart after `steps` forward iterates.
    pub fn converging_pair(
        kind: WitnessKind,
        sys: &AnySystem,
        x: &Vector,
        y: &Vector,
        steps: u64,
        threshold: f64,
        min_separation: f64,
    ) -> Result<Self> {
        if !matches!(kind, WitnessKind::NonDistalPair | WitnessKind::ConvergenceToPoint) {
            return Err(Error::InvalidInput(format!("{} is not a converging-pair kind", kind.as_str())));
        }
        sys.check_point(x)?;
        sys.check_point(y)?;
        let claimed = final_distance(sys, x, y, steps)?;
        Ok(Self::pair_witness(kind, sys, x, y, steps, claimed, threshold, min_separation))
    }

    /// Pair whose orbits stay within `claimed` of each other for `|n| ≤ steps`.
    pub fn nonexpansive_pair(
        sys: &AnySystem,
        x: &Vector,
        y: &Vector,
        steps: u64,
        delta: f64,
        min_separation: f64,
    ) -> Result<Self> {
        sys.check_point(x)?;
        sys.check_point(y)?;
        let claimed = sup_distance(sys, x, y, steps)?;
        Ok(Self::pair_witness(WitnessKind::NonExpansivePair, sys, x, y, steps, claimed, delta, min_separation))
    }

    #[allow(clippy::too_many_arguments)]
    fn pair_witness(
        kind: WitnessKind,
        sys: &AnySystem,
        x: &Vector,
        y: &Vector,
        steps: u64,
        claimed: f64,
        threshold: f64,
        min_separation: f64,
    ) -> Self {
        Self {
            kind,
            system: sys.to_witness_system(),
            data: WitnessData::Pair(PairData {
                x: x.iter().copied().collect(),
                y: y.iter().copied().collect(),
                steps,
                separation: sys.distance(x, y).unwrap_or(f64::NAN),
                min_separation,
                claimed,
                threshold,
                period: None,
                normalization: None,
            }),
            tolerance: TOL_REPLAY,
            seed: DEFAULT_SEED,
        }
    }

    pub fn with_period(mut self, period: u32) -> Self {
        if let WitnessData::Pair(p) = &mut self.data {
            p.period = Some(period);
        }
        self
    }

    pub fn with_normalization(mut self, lambda: f64) -> Self {
        if let WitnessData::Pair(p) = &mut self.data {
            p.normalization = Some(lambda);
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// `(‖T̄ᵖ(x) − x‖, min_{0<j<p} ‖T̄ʲ(x) − x‖)`.
pub fn periodic_residuals(sys: &AnySystem, x: &Vector, period: u32) -> Result<(f64, f64)> {
    let mut p = x.clone();
    let mut gap = f64::INFINITY;
    for j in 1..=period {
        p = sys.step(&p)?;
        if j < period {
            gap = gap.min(sys.distance(&p, x)?);
        }
    }
    let gap = if period == 1 { 0.0 } else { gap };
    Ok((sys.distance(&p, x)?, gap))
}

/// Distance between the `steps`-th iterates of `x` and `y`.
pub fn final_distance(sys: &AnySystem, x: &Vector, y: &Vector, steps: u64) -> Result<f64> {
    let (mut p, mut q) = (x.clone(), y.clone());
    for _ in 0..steps {
        p = sys.step(&p)?;
        q = sys.step(&q)?;
    }
    sys.distance(&p, &q)
}

/// `max_{|n| ≤ steps} d(T̄ⁿx, T̄ⁿy)`.
pub fn sup_distance(sys: &AnySystem, x: &Vector, y: &Vector, steps: u64) -> Result<f64> {
    let mut sup = sys.distance(x, y)?;
    let (mut p, mut q) = (x.clone(), y.clone());
    for _ in 0..steps {
        p = sys.step(&p)?;
        q = sys.step(&q)?;
        sup = sup.max(sys.distance(&p, &q)?);
    }
    let (mut p, mut q) = (x.clone(), y.clone());
    for _ in 0..steps {
        p = sys.step_inverse(&p)?;
        q = sys.step_inverse(&q)?;
        sup = sup.max(sys.distance(&p, &q)?);
    }
    Ok(sup)
}

/// A uniformly distributed point on the sphere (or on each sphere of a product).
pub fn random_point<R: Rng>(sys: &AnySystem, rng: &mut R) -> Vector {
    let dims: Vec<usize> = match sys {
        AnySystem::Single(s) => vec![s.dim()],
        AnySystem::Product(p) => p.factors().iter().map(|f| f.dim()).collect(),
    };
    let parts: Vec<Vector> = dims.into_iter().map(|d| random_unit(d, rng)).collect();
    crate::product::ProductSphereSystem::concat(&parts)
}

/// Uniform point on `S^{dim−1}` by rejection from the cube.
pub fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// `max ‖T̄²(x) − x‖` over `samples` seeded random points.
pub fn involution_residual(sys: &AnySystem, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = random_point(sys, &mut rng);
        let y = sys.step(&sys.step(&x)?)?;
        worst = worst.max(sys.distance(&x, &y)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecomputedBound {
    pub name: String,
    pub claimed: Option<f64>,
    pub recomputed: f64,
    /// The bound that `recomputed` must respect, already including slack.
    pub limit: f64,
    /// Whether the bound is an upper (`recomputed ≤ limit`) or lower bound.
    pub upper: bool,
    pub pass: bool,
}

impl RecomputedBound {
    fn at_most(name: &str, claimed: Option<f64>, recomputed: f64, limit: f64) -> Self {
        let pass = recomputed <= limit;
        Self { name: name.into(), claimed, recomputed, limit, upper: true, pass }
    }

    fn at_least(name: &str, claimed: Option<f64>, recomputed: f64, limit: f64) -> Self {
        let pass = recomputed >= limit;
        Self { name: name.into(), claimed, recomputed, limit, upper: false, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub recomputed_bounds: Vec<RecomputedBound>,
}

/// Re-runs the evidence in `w` and checks every claimed bound with slack
/// `2 · tolerance`.
pub fn verify(w: &Witness) -> Result<VerificationReport> {
    if !(w.tolerance.is_finite() && w.tolerance > 0.0) {
        return Err(Error::MalformedWitness(format!("tolerance {} must be positive", w.tolerance)));
    }
    let sys = AnySystem::from_witness_system(&w.system)
        .map_err(|e| Error::MalformedWitness(format!("system: {e}")))?;
    let slack = 2.0 * w.tolerance;
    let to_point = |v: &[f64]| -> Result<Vector> {
        let p = Vector::from_column_slice(v);
        sys.check_point(&p).map_err(|e| Error::MalformedWitness(format!("point: {e}")))?;
        Ok(p)
    };

    let mut bounds = Vec::new();
    match (w.kind, &w.data) {
        (WitnessKind::FixedPoint | WitnessKind::PeriodicOrbit, WitnessData::Point(d)) => {
            if d.period == 0 || (w.kind == WitnessKind::FixedPoint && d.period != 1) {
                return Err(Error::MalformedWitness(format!("period {} does not fit the kind", d.period)));
            }
            let x = to_point(&d.point)?;
            let (residual, gap) = periodic_residuals(&sys, &x, d.period)?;
            bounds.push(RecomputedBound::at_most("residual", Some(d.residual), residual, slack));
            if d.period > 1 {
                bounds.push(RecomputedBound::at_least("return_gap", Some(d.return_gap), gap, slack));
            }
        }
        (WitnessKind::Involution, WitnessData::Involution(d)) => {
            let residual = involution_residual(&sys, d.samples, w.seed)?;
            bounds.push(RecomputedBound::at_most("max_residual", Some(d.max_residual), residual, slack));
            bounds.push(RecomputedBound::at_least("samples", None, d.samples as f64, 1.0));
        }
        (
            WitnessKind::NonDistalPair | WitnessKind::ConvergenceToPoint | WitnessKind::NonExpansivePair,
            WitnessData::Pair(d),
        ) => {
            let x = to_point(&d.x)?;
            let y = to_point(&d.y)?;
            let separation = sys.distance(&x, &y)?;
            bounds.push(RecomputedBound::at_most(
                "separation_replay",
                Some(d.separation),
                (separation - d.separation).abs(),
                slack,
            ));
            bounds.push(RecomputedBound::at_least(
                "separation",
                None,
                separation,
                d.min_separation.max(MIN_PAIR_SEPARATION),
            ));
            let recomputed = if w.kind == WitnessKind::NonExpansivePair {
                if !sys.is_certified() {
                    bounds.push(RecomputedBound::at_least("homeomorphism", None, 0.0, 1.0));
                    None
                } else {
                    Some(sup_distance(&sys, &x, &y, d.steps)?)
                }
            } else {
                Some(final_distance(&sys, &x, &y, d.steps)?)
            };
            if let Some(r) = recomputed {
                bounds.push(RecomputedBound::at_most(
                    "distance_replay",
                    Some(d.claimed),
                    (r - d.claimed).abs(),
                    slack,
                ));
                let name = if w.kind == WitnessKind::NonExpansivePair { "sup_distance" } else { "final_distance" };
                bounds.push(RecomputedBound::at_most(name, Some(d.claimed), r, d.threshold + slack));
            }
        }
        _ => {
            return Err(Error::MalformedWitness(format!(
                "payload does not match kind {}",
                w.kind.as_str()
            )))
        }
    }
    let pass = bounds.iter().all(|b| b.pass);
    Ok(VerificationReport { pass, recomputed_bounds: bounds })
}
