use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use spheredyn::certificate::{random_unit, verify};
use spheredyn::circle::{
    fixed_points_numeric, involution_check, of_minimal_period, point_at, rotation_fixed_points, CircleMap,
};
use spheredyn::linalg::{self, Matrix, PlaneFrame, Vector};
use spheredyn::product::{lift_witness, AnySystem, ProductSphereSystem};
use spheredyn::sphere::{inverse_radial_roots, scalar_equivariance_check};
use spheredyn::sphere_n::{proximal_instance, sm_ledger};
use spheredyn::AffineSphereSystem;

fn matrix_strategy(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| Matrix::from_row_slice(n, n, &v))
}

fn well_conditioned(m: &Matrix) -> bool {
    let s = m.clone().svd(false, false).singular_values;
    s.min() > 0.05 && s.max() / s.min() < 100.0
}

fn unit_strategy(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-1.0f64..1.0, n)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let v = Vector::from_vec(v);
            let n = v.norm();
            v / n
        })
}

/// Random certified system with `‖T⁻¹a‖ = ratio`.
fn certified(t: Matrix, dir: &Vector, ratio: f64) -> AffineSphereSystem {
    let w = linalg::invert(&t).unwrap() * dir;
    let a = dir * (ratio / w.norm());
    AffineSphereSystem::build(t, a, true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invert_twice_is_identity(m in matrix_strategy(4).prop_filter("conditioned", well_conditioned)) {
        let back = linalg::invert(&linalg::invert(&m).unwrap()).unwrap();
        prop_assert!((back - &m).amax() < 1e-9);
    }

    #[test]
    fn operator_norm_is_submultiplicative(m in matrix_strategy(3), n in matrix_strategy(3)) {
        let lhs = linalg::operator_norm(&(&m * &n)).unwrap();
        let rhs = linalg::operator_norm(&m).unwrap() * linalg::operator_norm(&n).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
    }

    #[test]
    fn eigenvalues_are_characteristic_roots(m in matrix_strategy(5)) {
        // det(M − λI) via the complexified matrix.
        let n = 5;
        let bound = 1e-8 * (1.0 + linalg::operator_norm(&m).unwrap().powi(n as i32));
        for e in linalg::eigenvalues(&m).unwrap() {
            let c = nalgebra::DMatrix::from_fn(n, n, |i, j| {
                num_complex::Complex64::new(m[(i, j)], 0.0) - if i == j { e } else { 0.0.into() }
            });
            prop_assert!(c.determinant().norm() < bound);
        }
    }

    #[test]
    fn images_are_unit(t in matrix_strategy(3).prop_filter("conditioned", well_conditioned),
                       dir in unit_strategy(3), x in unit_strategy(3), ratio in 0.0f64..0.95) {
        let sys = certified(t, &dir, ratio);
        prop_assert!((sys.apply(&x).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selected_radial_root_is_positive(t in matrix_strategy(3).prop_filter("conditioned", well_conditioned),
                                        dir in unit_strategy(3), y in unit_strategy(3), ratio in 0.0f64..0.95) {
        let sys = certified(t, &dir, ratio);
        let (root, _) = inverse_radial_roots(&sys, &y);
        prop_assert!(root > 0.0);
        let pre = sys.inverse_matrix() * (&y * root - sys.offset());
        prop_assert!((pre.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn scalar_equivariance(theta in 0.0f64..TAU, alpha in 0.05f64..0.95, turn in 0.0f64..TAU,
                           phi in 0.0f64..TAU, n in 0usize..=50) {
        let r = scalar_equivariance_check(&linalg::rotation(theta), [0.0, alpha], point_at(turn), point_at(phi), n)
            .unwrap();
        prop_assert!(r < 1e-9);
    }

    #[test]
    fn projective_map_is_odd(t in matrix_strategy(4).prop_filter("conditioned", well_conditioned),
                             x in unit_strategy(4)) {
        let sys = AffineSphereSystem::build(t, Vector::zeros(4), true).unwrap();
        let plus = sys.apply(&x).unwrap();
        let minus = sys.apply(&-&x).unwrap();
        prop_assert!((plus + minus).norm() < 1e-12);
    }

    #[test]
    fn rotation_oracle_agreement(theta in -PI..PI, alpha in 0.05f64..0.95, turn in 0.0f64..TAU) {
        let gap = theta.cos() - (1.0 - alpha * alpha).sqrt();
        prop_assume!(gap.abs() >= 1e-3);
        let a = point_at(turn).map(|c| c * alpha);
        let a = [-a[1], a[0]];
        let closed = rotation_fixed_points(theta, a).unwrap();
        let sys = AffineSphereSystem::build(linalg::rotation(theta), Vector::from_column_slice(&a), true).unwrap();
        let numeric = fixed_points_numeric(&sys, 1).unwrap();
        prop_assert_eq!(closed.len(), numeric.len());
        for c in &closed {
            prop_assert!(numeric.iter().any(|n| (n.point[0] - c.point[0]).hypot(n.point[1] - c.point[1]) < 1e-8));
        }
        if closed.len() == 2 {
            use spheredyn::Stability::*;
            let kinds: Vec<_> = closed.iter().map(|r| r.stability).collect();
            prop_assert!(kinds.contains(&Attracting) && kinds.contains(&Repelling));
        }
    }

    #[test]
    fn period_two_points_are_swapped(theta in 2.0f64..PI, alpha in 0.05f64..0.95) {
        let sys = AffineSphereSystem::build(linalg::rotation(theta), Vector::from_column_slice(&[0.0, alpha]), true)
            .unwrap();
        let map = CircleMap::from_system(&sys).unwrap();
        let two = of_minimal_period(&fixed_points_numeric(&sys, 2).unwrap(), 2);
        for p in &two {
            let q = map.apply(p.point);
            prop_assert!(two.iter().any(|r| (r.point[0] - q[0]).hypot(r.point[1] - q[1]) < 1e-8));
        }
    }

    #[test]
    fn involutions_fix_every_point_under_the_square(lambda1 in -3.0f64..-0.5, lambda2 in -0.4f64..0.4,
                                                     turn in 0.0f64..TAU) {
        let alpha = (lambda1 * lambda1 - lambda2 * lambda2).sqrt();
        prop_assume!(alpha < lambda1.abs() * 0.999);
        let q = linalg::rotation(turn);
        let t = &q * linalg::diag(&[lambda2, lambda1]) * q.transpose();
        let a = &q * Vector::from_column_slice(&[0.0, alpha]);
        let sys = AffineSphereSystem::build(t, a, true).unwrap();
        let r = involution_check(&sys).unwrap();
        prop_assert!(r.is_involution);
        let mut rng = ChaCha8Rng::seed_from_u64(turn.to_bits());
        for _ in 0..1000 {
            let x = random_unit(2, &mut rng);
            prop_assert!((sys.iterate(&x, 2).unwrap() - &x).norm() < 1e-9);
        }
    }
}

fn random_proximal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    loop {
        let p = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        if !well_conditioned(&p) {
            continue;
        }
        let mut d = Matrix::zeros(n, n);
        d[(0, 0)] = rng.random_range(1.0..3.0);
        let mut i = 1;
        while i < n {
            let r = d[(0, 0)] * rng.random_range(0.1..0.8);
            if i + 1 < n && rng.random_bool(0.5) {
                let block = linalg::rotation(rng.random_range(0.2..3.0)) * r;
                d.view_mut((i, i), (2, 2)).copy_from(&block);
                i += 2;
            } else {
                d[(i, i)] = if rng.random_bool(0.5) { r } else { -r };
                i += 1;
            }
        }
        // The construction needs det T > 0.
        if linalg::determinant(&d) < 0.0 {
            let i = (1..n).rev().find(|&i| d[(i, i)] != 0.0 && (i + 1 == n || d[(i + 1, i)] == 0.0) && d[(i, i - 1)] == 0.0)
                .expect("a real eigenvalue changes the sign of det");
            d[(i, i)] = -d[(i, i)];
        }
        return &p * d * linalg::invert(&p).unwrap();
    }
}

#[test]
fn ledger_and_convergence_on_random_proximal_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..20 {
        let t = random_proximal(3 + k % 3, &mut rng);
        let inst = proximal_instance(&t).unwrap().expect("proximal");
        let d = inst.witness.pair().unwrap();
        assert!(d.claimed < 1e-6);
        assert!(verify(&inst.witness).unwrap().pass);
        let x = Vector::from_column_slice(&d.x);
        for m in [1, 7, 40, 100] {
            let l = sm_ledger(&inst.system, &x, m).unwrap();
            assert!(l.closed_form_gap < 1e-7 * m as f64);
            assert!(l.s_m() >= 1.0 + (m as f64 - 1.0) * l.alpha0 - 1e-8);
        }
        // Eventually monotone once below the threshold.
        let a_bar = inst.system.offset().normalize();
        let mut p = inst.system.iterate(&x, d.steps as i64).unwrap();
        let mut last = (&p - &a_bar).norm();
        for _ in 0..50 {
            p = inst.system.step(&p).unwrap();
            let now = (&p - &a_bar).norm();
            assert!(now < 1e-6, "left the threshold: {now:e}");
            // Below 1e-12 the distance is rounding noise.
            assert!(last < 1e-12 || now <= last, "not monotone: {last:e} -> {now:e}");
            last = now;
        }
    }
}

#[test]
fn orbits_stay_on_an_attracting_invariant_circle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = Matrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q();
    let t = &q * Matrix::identity(4, 4) * q.transpose();
    let plane = PlaneFrame::new(&q.column(0).into_owned(), &q.column(1).into_owned());
    let sys = AffineSphereSystem::build(t, plane.embed([0.0, 0.5]), true).unwrap();
    for k in 0..8 {
        let mut x = plane.embed(point_at(0.7 * k as f64 + 0.1));
        let mut y = x.clone();
        for _ in 0..1000 {
            x = sys.step(&x).unwrap();
            y = sys.step_inverse(&y).unwrap();
            assert!(plane.off_plane(&x) < 1e-8 && plane.off_plane(&y) < 1e-8);
        }
    }
}

#[test]
fn lifted_pairs_match_factor_distances() {
    let id = AffineSphereSystem::build(Matrix::identity(2, 2), Vector::from_column_slice(&[0.0, 0.5]), true).unwrap();
    let rot = AffineSphereSystem::build(linalg::rotation(PI / 3.0), Vector::from_column_slice(&[0.0, 0.5]), true)
        .unwrap();
    let p = ProductSphereSystem::assemble(vec![rot.clone(), id.clone()]).unwrap();
    let w = spheredyn::sphere_n::nonexpansive_witness(&id, 0.01, 200).unwrap();
    let lifted = lift_witness(&p, 1, &w).unwrap();
    assert!(verify(&lifted).unwrap().pass);
    let (fd, ld) = (w.pair().unwrap(), lifted.pair().unwrap());
    let single = AnySystem::Single(id);
    let prod = AnySystem::Product(p);
    let (mut x, mut y) = (Vector::from_column_slice(&fd.x), Vector::from_column_slice(&fd.y));
    let (mut lx, mut ly) = (Vector::from_column_slice(&ld.x), Vector::from_column_slice(&ld.y));
    for _ in 0..200 {
        let a = single.distance(&x, &y).unwrap();
        let b = prod.distance(&lx, &ly).unwrap();
        assert!((a - b).abs() < 1e-12);
        x = single.step(&x).unwrap();
        y = single.step(&y).unwrap();
        lx = prod.step(&lx).unwrap();
        ly = prod.step(&ly).unwrap();
    }
}

#[test]
fn verification_is_deterministic() {
    let sys = AffineSphereSystem::build(linalg::diag(&[1.0, -2.0]), Vector::from_column_slice(&[0.0, 3f64.sqrt()]), true)
        .unwrap();
    let w = spheredyn::Witness::involution(&AnySystem::Single(sys), 1000, 7).unwrap();
    let a = serde_json::to_string(&verify(&w).unwrap()).unwrap();
    let b = serde_json::to_string(&verify(&spheredyn::Witness::from_json(&w.to_json()).unwrap()).unwrap()).unwrap();
    assert_eq!(a, b);
}
