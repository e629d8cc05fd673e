use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::sphere::AffineSphereSystem;

/// `T̄ₐ` on `S¹` with the matrix held in registers.
#[derive(Debug, Clone, Copy)]
pub struct CircleMap {
    t: [[f64; 2]; 2],
    a: [f64; 2],
    t_inv: [[f64; 2]; 2],
    w: [f64; 2],
    invertible: bool,
}

#[inline]
fn mat_vec(m: &[[f64; 2]; 2], x: [f64; 2]) -> [f64; 2] {
    [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
}

#[inline]
pub(crate) fn norm2(x: [f64; 2]) -> f64 {
    // Arguments are O(1) here, so the plain root is safe and much faster than hypot.
    (x[0] * x[0] + x[1] * x[1]).sqrt()
}

#[inline]
pub(crate) fn dist2(x: [f64; 2], y: [f64; 2]) -> f64 {
    (x[0] - y[0]).hypot(x[1] - y[1])
}

#[inline]
pub fn point_at(phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c, s]
}

/// Angle of `x` in `[0, 2π)`.
#[inline]
pub fn angle_of(x: [f64; 2]) -> f64 {
    x[1].atan2(x[0]).rem_euclid(TAU)
}

/// Wraps an angle difference into `(−π, π]`.
#[inline]
pub fn wrap(d: f64) -> f64 {
    let r = d.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

impl CircleMap {
    pub fn new(t: [[f64; 2]; 2], a: [f64; 2]) -> Result<Self> {
        let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
        if !(det.abs() > crate::linalg::TOL_SINGULAR) {
            return Err(Error::SingularMatrix { det });
        }
        let t_inv = [[t[1][1] / det, -t[0][1] / det], [-t[1][0] / det, t[0][0] / det]];
        let w = mat_vec(&t_inv, a);
        let invertible = norm2(w) < 1.0 - crate::sphere::TOL_BOUNDARY;
        Ok(Self { t, a, t_inv, w, invertible })
    }

    pub fn rotation(theta: f64, a: [f64; 2]) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new([[c, -s], [s, c]], a).expect("rotations are invertible")
    }

    pub fn from_system(sys: &AffineSphereSystem) -> Result<Self> {
        if sys.dim() != 2 {
            return Err(Error::UnsupportedDimension { expected: 2, got: sys.dim() });
        }
        let m = sys.matrix();
        let a = sys.offset();
        Self::new([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]], [a[0], a[1]])
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.t
    }

    pub fn offset(&self) -> [f64; 2] {
        self.a
    }

    pub fn is_invertible(&self) -> bool {
        self.invertible
    }

    #[inline]
    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let y = mat_vec(&self.t, x);
        let y = [y[0] + self.a[0], y[1] + self.a[1]];
        let n = norm2(y);
        [y[0] / n, y[1] / n]
    }

    /// Inverse map; meaningful only when `is_invertible`.
    #[inline]
    pub fn inverse(&self, y: [f64; 2]) -> [f64; 2] {
        let u = mat_vec(&self.t_inv, y);
        let a = u[0] * u[0] + u[1] * u[1];
        let b = u[0] * self.w[0] + u[1] * self.w[1];
        let c = self.w[0] * self.w[0] + self.w[1] * self.w[1] - 1.0;
        let sq = (b * b - a * c).max(0.0).sqrt();
        let t = if b >= 0.0 { (b + sq) / a } else { c / (b - sq) };
        let x = [t * u[0] - self.w[0], t * u[1] - self.w[1]];
        let n = norm2(x);
        [x[0] / n, x[1] / n]
    }

    #[inline]
    pub fn iterate(&self, mut x: [f64; 2], p: u32) -> [f64; 2] {
        for _ in 0..p {
            x = self.apply(x);
        }
        x
    }

    /// Signed angular displacement `g(φ) = wrap(arg T̄ᵖ(x(φ)) − φ)`.
    #[inline]
    pub fn displacement(&self, phi: f64, p: u32) -> f64 {
        self.displacement_from(point_at(phi), p)
    }

    #[inline]
    fn displacement_from(&self, x: [f64; 2], p: u32) -> f64 {
        let y = self.iterate(x, p);
        // Angle from x to y, already in (−π, π].
        (x[0] * y[1] - x[1] * y[0]).atan2(x[0] * y[0] + x[1] * y[1])
    }

    /// `|d/dφ arg T̄ᵖ(x(φ))|` by central difference.
    pub fn multiplier(&self, phi: f64, p: u32) -> f64 {
        let h = MULTIPLIER_STEP;
        let up = self.iterate(point_at(phi + h), p);
        let down = self.iterate(point_at(phi - h), p);
        (wrap(up[1].atan2(up[0]) - down[1].atan2(down[0])) / (2.0 * h)).abs()
    }
}

pub const MULTIPLIER_STEP: f64 = 1e-6;
pub const N_SCAN: usize = 4096;
pub const N_SCAN_MAX: usize = 1 << 16;
pub const BISECTION_WIDTH: f64 = 1e-13;
pub const DEDUP_ANGLE: f64 = 1e-8;
/// `max |g|` below which `T̄ᵖ` is taken to be the identity.
pub const IDENTITY_DISPLACEMENT: f64 = 1e-12;

/// Angles of the zeros of the displacement `g` for `T̄ᵖ`, sorted ascending.
///
/// The grid starts at `n_scan` cells and doubles (up to `n_max`) whenever two
/// roots land within four cells of each other.
pub fn displacement_roots(map: &CircleMap, p: u32, n_scan: usize, n_max: usize) -> Result<Vec<f64>> {
    let mut n = n_scan.max(8);
    loop {
        let roots = scan_once(map, p, n)?;
        let cell = TAU / n as f64;
        let crowded = roots.len() > 1
            && (0..roots.len()).any(|i| {
                let next = if i + 1 < roots.len() { roots[i + 1] } else { roots[0] + TAU };
                next - roots[i] < 4.0 * cell
            });
        if !crowded || n * 2 > n_max {
            return Ok(roots);
        }
        n *= 2;
    }
}

type Grid = Arc<[[f64; 2]]>;

/// The `n + 1` scan points `point_at(2πi/n)`, shared across calls.
fn grid_points(n: usize) -> Grid {
    static CACHE: OnceLock<Mutex<Vec<(usize, Grid)>>> = OnceLock::new();
    let mut cache = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    if let Some((_, pts)) = cache.iter().find(|(m, _)| *m == n) {
        return pts.clone();
    }
    let step = TAU / n as f64;
    let pts: Grid = (0..=n).map(|i| point_at(step * i as f64)).collect();
    if cache.len() >= 16 {
        cache.remove(0);
    }
    cache.push((n, pts.clone()));
    pts
}

fn scan_once(map: &CircleMap, p: u32, n: usize) -> Result<Vec<f64>> {
    let step = TAU / n as f64;
    let g: Vec<f64> = grid_points(n).iter().map(|&x| map.displacement_from(x, p)).collect();
    if g.iter().all(|v| v.abs() <= IDENTITY_DISPLACEMENT) {
        return Err(Error::IdenticallyPeriodic { period: p });
    }
    let mut roots = Vec::new();
    for i in 0..n {
        let (g0, g1) = (g[i], g[i + 1]);
        let (lo, hi) = (step * i as f64, step * (i + 1) as f64);
        if g0 == 0.0 {
            roots.push(lo);
            continue;
        }
        // A jump of about 2π is the branch cut of the wrap, not a zero.
        if g0 * g1 < 0.0 && (g0 - g1).abs() < PI {
            roots.push(bisect(map, p, lo, hi, g0));
        }
    }
    for r in roots.iter_mut() {
        *r = r.rem_euclid(TAU);
    }
    roots.sort_by(f64::total_cmp);
    Ok(dedup_angles(roots))
}

fn bisect(map: &CircleMap, p: u32, mut lo: f64, mut hi: f64, mut g_lo: f64) -> f64 {
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = map.displacement(mid, p);
        if g_mid == 0.0 {
            return mid;
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Merges sorted angles closer than `DEDUP_ANGLE` (including across `2π`).
pub fn dedup_angles(sorted: Vec<f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(sorted.len());
    for r in sorted {
        if out.last().is_some_and(|l| r - l < DEDUP_ANGLE) {
            continue;
        }
        out.push(r);
    }
    if out.len() > 1 && out[0] + TAU - out[out.len() - 1] < DEDUP_ANGLE {
        out.pop();
    }
    out
}
