use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::certificate::{random_unit, Witness, DEFAULT_SEED, MIN_PAIR_SEPARATION};
use crate::circle::{fixed_points_of_map, point_at, CircleMap, Stability, N_SCAN};
use crate::error::{Error, Result};
use crate::linalg::{self, PlaneFrame, Vector};
use crate::product::AnySystem;
use crate::sphere::AffineSphereSystem;

/// Tolerance for `a` lying in a `T`-invariant plane.
pub const PLANE_TOL: f64 = 1e-8;
/// Halvings of the pair separation per pass.
pub const MAX_HALVINGS: u32 = 20;
const UNIFORM_BASES: usize = 64;
const ARC_OFFSETS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
const PLANE_CONFIRMATIONS: usize = 24;
const RANDOM_BASES: usize = 48;

/// `T̄ₐ` on `Sⁿ⁻¹` over flat row-major storage, for tight search loops.
struct FlatMap {
    n: usize,
    t: Vec<f64>,
    t_inv: Vec<f64>,
    a: Vec<f64>,
    w: Vec<f64>,
    w2: f64,
}

impl FlatMap {
    fn new(sys: &AffineSphereSystem) -> Self {
        let n = sys.dim();
        let flat = |m: &linalg::Matrix| (0..n * n).map(|k| m[(k / n, k % n)]).collect::<Vec<f64>>();
        let w: Vec<f64> = (sys.inverse_matrix() * sys.offset()).iter().copied().collect();
        Self {
            n,
            t: flat(sys.matrix()),
            t_inv: flat(sys.inverse_matrix()),
            a: sys.offset().iter().copied().collect(),
            w2: w.iter().map(|v| v * v).sum(),
            w,
        }
    }

    fn mat_vec(&self, m: &[f64], x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = m[i * self.n..(i + 1) * self.n].iter().zip(x).map(|(p, q)| p * q).sum();
        }
    }

    fn step(&self, x: &mut [f64], buf: &mut [f64]) {
        self.mat_vec(&self.t, x, buf);
        let mut norm = 0.0;
        for (b, a) in buf.iter_mut().zip(&self.a) {
            *b += a;
            norm += *b * *b;
        }
        let norm = norm.sqrt();
        for (xi, b) in x.iter_mut().zip(buf.iter()) {
            *xi = b / norm;
        }
    }

    fn step_inverse(&self, y: &mut [f64], buf: &mut [f64]) {
        self.mat_vec(&self.t_inv, y, buf);
        let uu: f64 = buf.iter().map(|v| v * v).sum();
        let uw: f64 = buf.iter().zip(&self.w).map(|(p, q)| p * q).sum();
        let c = self.w2 - 1.0;
        let sq = (uw * uw - uu * c).max(0.0).sqrt();
        let t = if uw >= 0.0 { (uw + sq) / uu } else { c / (uw - sq) };
        let mut norm = 0.0;
        for (b, w) in buf.iter_mut().zip(&self.w) {
            *b = t * *b - w;
            norm += *b * *b;
        }
        let norm = norm.sqrt();
        for (yi, b) in y.iter_mut().zip(buf.iter()) {
            *yi = b / norm;
        }
    }

    /// `max_{|k| ≤ steps} ‖T̄ᵏx − T̄ᵏy‖`, abandoning the orbit once it reaches `limit`.
    fn sup_distance(&self, x: &[f64], y: &[f64], steps: u64, limit: f64) -> f64 {
        let dist = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let mut sup = dist(x, y);
        let mut buf = vec![0.0; self.n];
        for forward in [true, false] {
            let (mut p, mut q) = (x.to_vec(), y.to_vec());
            for _ in 0..steps {
                if sup >= limit {
                    return sup;
                }
                if forward {
                    self.step(&mut p, &mut buf);
                    self.step(&mut q, &mut buf);
                } else {
                    self.step_inverse(&mut p, &mut buf);
                    self.step_inverse(&mut q, &mut buf);
                }
                sup = sup.max(dist(&p, &q));
            }
        }
        sup
    }
}

fn circle_sup(map: &CircleMap, x: [f64; 2], y: [f64; 2], steps: u64, limit: f64) -> f64 {
    let d = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).hypot(p[1] - q[1]);
    let mut sup = d(x, y);
    for forward in [true, false] {
        let (mut p, mut q) = (x, y);
        for _ in 0..steps {
            if sup >= limit {
                return sup;
            }
            if forward {
                p = map.apply(p);
                q = map.apply(q);
            } else {
                p = map.inverse(p);
                q = map.inverse(q);
            }
            sup = sup.max(d(p, q));
        }
    }
    sup
}

/// Angle difference whose chord is `sep`.
fn chord_angle(sep: f64) -> f64 {
    2.0 * (0.5 * sep).min(1.0).asin()
}

/// Separation schedules: `δ/2` halved down to `δ/10`, then on down to the
/// global floor. A pair `δ` apart already has `sup = δ`.
fn separations(delta: f64) -> [Vec<f64>; 2] {
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut sep = delta / 2.0;
    for _ in 0..=MAX_HALVINGS {
        if sep >= delta / 10.0 {
            first.push(sep);
        } else if sep >= MIN_PAIR_SEPARATION {
            second.push(sep);
        }
        sep /= 2.0;
    }
    if second.last().is_none_or(|&s| s > MIN_PAIR_SEPARATION) {
        second.push(MIN_PAIR_SEPARATION);
    }
    [first, second]
}

/// Base angles: inside fundamental arcs next to attracting points first,
/// then a uniform grid ordered by decreasing `|g|`.
fn base_angles(map: &CircleMap) -> Vec<f64> {
    let mut out = Vec::new();
    for p in 1..=2u32 {
        if let Ok(records) = fixed_points_of_map(map, p, N_SCAN) {
            for rec in records.iter().filter(|r| r.stability == Stability::Attracting) {
                for off in ARC_OFFSETS {
                    out.push(rec.angle + off);
                    out.push(rec.angle - off);
                }
            }
        }
    }
    let mut grid: Vec<(f64, f64)> = (0..UNIFORM_BASES)
        .map(|i| {
            let phi = TAU * (i as f64 + 0.5) / UNIFORM_BASES as f64;
            (phi, map.displacement(phi, 1).abs())
        })
        .collect();
    grid.sort_by(|l, r| r.1.total_cmp(&l.1));
    out.extend(grid.into_iter().map(|(phi, _)| phi));
    out
}

fn confirm(sys: &AnySystem, x: &Vector, y: &Vector, horizon: u64, delta: f64, min_sep: f64) -> Result<Option<Witness>> {
    let w = Witness::nonexpansive_pair(sys, x, y, horizon, delta, min_sep)?;
    let d = w.pair().expect("pair witness");
    Ok((d.claimed < delta && d.separation >= min_sep).then_some(w))
}

/// `T`-invariant plane containing `a` (any invariant plane when `a = 0`).
pub fn plane_through_offset(sys: &AffineSphereSystem) -> Result<PlaneFrame> {
    let t = sys.matrix();
    let a = sys.offset();
    let tol = PLANE_TOL * t.norm().max(1.0);
    if sys.dim() == 2 {
        return linalg::invariant_2plane(t);
    }
    if a.norm() == 0.0 {
        return linalg::invariant_2plane(t);
    }
    let ta = t * a;
    let along = ta.dot(a) / a.norm_squared();
    let perp = &ta - a * along;
    let a_hat = a / a.norm();
    let candidates: Vec<PlaneFrame> = if perp.norm() > PLANE_TOL * ta.norm() {
        vec![PlaneFrame::new(&a_hat, &(&perp / perp.norm()))]
    } else {
        // a is an eigenvector: pair it with a real eigenvector w of the
        // compression of T to a⊥, so that Tw ∈ span(a, w).
        let n = sys.dim();
        let mut vectors = vec![a_hat.clone()];
        vectors.extend((0..n).map(|i| Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 })));
        let q = linalg::Matrix::from_columns(&linalg::orthonormalize(&vectors)[1..n]);
        let c = q.transpose() * t * &q;
        linalg::eigenvalues(&c)?
            .into_iter()
            .filter(|e| e.im == 0.0)
            .filter_map(|e| {
                let id = linalg::Matrix::identity(n - 1, n - 1);
                linalg::null_space(&(&c - id * e.re), 1).pop()
            })
            .map(|v| PlaneFrame::new(&a_hat, &(&q * v).normalize()))
            .collect()
    };
    candidates
        .into_iter()
        .find(|p| p.invariance_residual(t) <= tol)
        .ok_or(Error::PlaneNotFound)
}

/// A pair `x ≠ y` whose orbits stay within `delta` for `|n| ≤ horizon`,
/// searched on the circle cut out by the invariant plane through `a`.
pub fn nonexpansive_witness(sys: &AffineSphereSystem, delta: f64, horizon: u64) -> Result<Witness> {
    nonexpansive_witness_seeded(sys, delta, horizon, DEFAULT_SEED)
}

/// As [`nonexpansive_witness`]; `seed` drives the off-plane fallback.
pub fn nonexpansive_witness_seeded(sys: &AffineSphereSystem, delta: f64, horizon: u64, seed: u64) -> Result<Witness> {
    let plane = plane_through_offset(sys)?;
    nonexpansive_witness_on_plane(sys, &plane, delta, horizon, seed)
}

pub fn nonexpansive_witness_on_plane(
    sys: &AffineSphereSystem,
    plane: &PlaneFrame,
    delta: f64,
    horizon: u64,
    seed: u64,
) -> Result<Witness> {
    check_args(sys, delta)?;
    let t = sys.matrix();
    if plane.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), got: plane.dim() });
    }
    if plane.invariance_residual(t) > PLANE_TOL * t.norm().max(1.0)
        || plane.off_plane(sys.offset()) > PLANE_TOL * sys.alpha().max(1.0)
    {
        return Err(Error::PlaneNotFound);
    }
    let b = plane.restrict(t);
    let a = plane.coords(sys.offset());
    let map = CircleMap::new([[b[(0, 0)], b[(0, 1)]], [b[(1, 0)], b[(1, 1)]]], a)?;
    if !map.is_invertible() {
        return Err(Error::NotInvertible);
    }
    let any = AnySystem::Single(sys.clone());
    let bases = base_angles(&map);
    let mut confirmations = 0;
    for (pass, seps) in separations(delta).iter().enumerate() {
        let min_sep = if pass == 0 { delta / 10.0 } else { MIN_PAIR_SEPARATION };
        for &sep in seps {
            let dphi = chord_angle(sep);
            for &phi in &bases {
                let (x, y) = (point_at(phi), point_at(phi + dphi));
                if circle_sup(&map, x, y, horizon, delta) >= delta {
                    continue;
                }
                // Drift off the plane can grow when the plane is transversally
                // unstable, so each candidate is replayed in the full space.
                if let Some(w) = confirm(&any, &plane.embed(x), &plane.embed(y), horizon, delta, min_sep)? {
                    return Ok(w);
                }
                confirmations += 1;
                if confirmations >= PLANE_CONFIRMATIONS {
                    return nonexpansive_witness_anywhere(sys, delta, horizon, seed);
                }
            }
        }
    }
    nonexpansive_witness_anywhere(sys, delta, horizon, seed)
}

fn check_args(sys: &AffineSphereSystem, delta: f64) -> Result<()> {
    if !sys.is_certified() {
        return Err(Error::NotInvertible);
    }
    if !(delta > MIN_PAIR_SEPARATION && delta <= 2.0) {
        return Err(Error::InvalidInput(format!("delta must lie in ({MIN_PAIR_SEPARATION}, 2], got {delta}")));
    }
    Ok(())
}

/// Full-space search from seeded random base points and directions.
pub fn nonexpansive_witness_anywhere(sys: &AffineSphereSystem, delta: f64, horizon: u64, seed: u64) -> Result<Witness> {
    check_args(sys, delta)?;
    let n = sys.dim();
    let flat = FlatMap::new(sys);
    let any = AnySystem::Single(sys.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases: Vec<(Vector, Vector)> = (0..RANDOM_BASES)
        .map(|_| {
            let x = random_unit(n, &mut rng);
            let mut u = random_unit(n, &mut rng);
            u -= &x * x.dot(&u);
            let len = u.norm();
            (x, u / len)
        })
        .collect();
    for (pass, seps) in separations(delta).iter().enumerate() {
        let min_sep = if pass == 0 { delta / 10.0 } else { MIN_PAIR_SEPARATION };
        for &sep in seps {
            // y on the great circle through x along u, at chord distance sep.
            let angle = chord_angle(sep);
            for (x, u) in &bases {
                let y = x * angle.cos() + u * angle.sin();
                let (xs, ys): (Vec<f64>, Vec<f64>) = (x.iter().copied().collect(), y.iter().copied().collect());
                if flat.sup_distance(&xs, &ys, horizon, delta) >= delta {
                    continue;
                }
                if let Some(w) = confirm(&any, x, &y, horizon, delta, min_sep)? {
                    return Ok(w.with_seed(seed));
                }
            }
        }
    }
    Err(Error::WitnessNotFound(format!(
        "no pair with separation at least {MIN_PAIR_SEPARATION:e} stays within {delta} for {horizon} steps"
    )))
}
