use hyperhol::error::HyperholError;
use hyperhol::exterior::{CMat, C64};
use hyperhol::quaternion_frame::*;
use nalgebra::{DMatrix, Quaternion};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn unit_triple() -> impl Strategy<Value = [f64; 3]> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("away from the origin", |(a, b, c)| a * a + b * b + c * c > 1e-3)
        .prop_map(|(a, b, c)| {
            let n = (a * a + b * b + c * c).sqrt();
            [a / n, b / n, c / n]
        })
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[test]
fn frame_invariants_hold_exactly() {
    let t = Instant::now();
    let f = make_frame();
    let id = DMatrix::<f64>::identity(4, 4);
    for m in [f.i(), f.j(), f.k()] {
        assert_eq!(m * m, -&id);
        assert_eq!(m.transpose() * m, id);
    }
    assert_eq!(f.i() * f.j(), f.k().clone());
    assert_eq!(f.j() * f.i(), -f.k());
    // (I∘J) dx₁ = K dx₁.
    let dx1 = nalgebra::DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
    assert_eq!(f.i() * (f.j() * &dx1), f.k() * &dx1);
    assert!(t.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn kahler_forms_span_the_self_dual_forms() {
    let f = make_frame();
    let a = f.algebra();
    let star = a.block(&a.hodge_star(), 2, 2);
    // Brute force: the +1 eigenspace of ⋆ on Λ², from (⋆ + 1)/2.
    let plus = (&star + CMat::identity(6, 6)) * C64::new(0.5, 0.0);
    assert_eq!(plus.rank(1e-12), 3);
    let range = a.degree_range(2);
    for l in [f.structure_i(), f.structure_j(), f.structure_k()] {
        let w: Vec<C64> = f.kahler_form(&l)[range.clone()].to_vec();
        let w = nalgebra::DVector::from_vec(w);
        assert!((&plus * &w - &w).norm() < 1e-14);
    }
}

#[test]
fn induced_structures_and_errors() {
    let f = make_frame();
    assert_eq!(f.induced(1.0, 0.0, 0.0).unwrap().matrix(), f.i());
    assert_eq!(f.induced(0.0, 0.0, 1.0).unwrap().matrix(), f.k());
    let s = 1.0 / 3f64.sqrt();
    let l = f.induced(s, s, s).unwrap();
    let sq = l.matrix() * l.matrix() + DMatrix::<f64>::identity(4, 4);
    assert!(sq.camax() <= 1e-12);
    assert!(matches!(f.induced(1.0, 1.0, 0.0), Err(HyperholError::NotUnitTriple { .. })));
}

#[test]
fn ad_operator_basics() {
    let f = make_frame();
    let a = f.algebra();
    let i = f.structure_i();
    let ad1 = f.ad_operator(&i, 1);
    let block = ad1.block(1, 1);
    for r in 0..4 {
        for c in 0..4 {
            assert_eq!(block[(r, c)].re, f.i()[(r, c)]);
        }
    }
    assert!(f.ad_operator(&i, 0).matrix().iter().all(|z| z.norm() == 0.0));
    let wi = f.kahler_form(&i);
    let image = f.ad_full(&i).apply(&wi);
    assert!(image.iter().all(|z| z.norm() < 1e-15));
    assert_eq!(a.size(), 16);
}

#[test]
fn type_projectors_by_hand_and_holomorphic_symplectic_form() {
    let f = make_frame();
    let a = f.algebra();
    let i = f.structure_i();
    let p10 = f.type_projector(&i, 1, 0);
    for mu in 0..4 {
        let mut dx = vec![C64::new(0.0, 0.0); 16];
        dx[a.index_of(&[mu])] = C64::new(1.0, 0.0);
        let got = p10.apply(&dx);
        // (dx − √−1 I dx)/2, with I acting on the coframe by its matrix.
        for nu in 0..4 {
            let want = C64::new(if nu == mu { 0.5 } else { 0.0 }, -0.5 * f.i()[(nu, mu)]);
            assert!((got[a.index_of(&[nu])] - want).norm() < 1e-15);
        }
    }
    let omega = f.holomorphic_symplectic_form();
    let p20 = f.type_projector(&i, 2, 0).apply(&omega);
    assert!(p20.iter().zip(&omega).all(|(x, y)| (x - y).norm() < 1e-15));
}

#[test]
fn su2_invariant_projector_is_the_anti_self_dual_projector() {
    let f = make_frame();
    let a = f.algebra();
    let p = f.su2_invariant_projector();
    for l in [f.structure_i(), f.structure_j(), f.structure_k()] {
        assert!(p.apply(&f.kahler_form(&l)).iter().all(|z| z.norm() < 1e-15));
    }
    assert_eq!(p.matrix().rank(1e-10), 3);
    assert!(p.apply(&[C64::new(0.0, 0.0); 16]).iter().all(|z| z.norm() == 0.0));
    // Brute-force orbit average over seeded random unit quaternions.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut avg = CMat::zeros(16, 16);
    let samples = 4000;
    for _ in 0..samples {
        let q = random_unit_quaternion(&mut rng);
        avg += a.multiplicative(&f.unit_quaternion_matrix(&q));
    }
    avg /= C64::new(samples as f64, 0.0);
    let proj2 = a.degree_projector(2);
    let mc = &proj2 * avg * &proj2;
    assert!((mc - p.matrix()).camax() < 0.1);
    let star = a.hodge_star();
    let minus = (CMat::identity(16, 16) - &star) * C64::new(0.5, 0.0) * &proj2;
    assert!((minus - p.matrix()).camax() < 1e-14);
}

#[test]
fn rotation_between_examples() {
    let f = make_frame();
    let i = f.structure_i();
    let j = f.structure_j();
    assert_eq!(rotation_between(&f, &i, &i), i);
    let r = rotation_between(&f, &i, &j);
    let s = 1.0 / 2f64.sqrt();
    assert!((r.coeffs()[0] - s).abs() < 1e-15 && (r.coeffs()[1] - s).abs() < 1e-15);
    let rq = r.quaternion();
    let moved = conjugate_structure(&f, &rq, &i);
    assert!((moved.matrix() - j.matrix()).camax() < 1e-12);
    let minus_i = f.induced(-1.0, 0.0, 0.0).unwrap();
    let t = rotation_between(&f, &i, &minus_i);
    let moved = conjugate_structure(&f, &t.quaternion(), &i);
    assert!((moved.matrix() - minus_i.matrix()).camax() < 1e-12);
}

#[test]
fn type_projectors_sum_to_identity_for_random_structures() {
    let f = make_frame();
    let a = f.algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..20 {
        let l = f.random_induced(&mut rng);
        for n in 0..=4usize {
            let mut sum = CMat::zeros(16, 16);
            let projs: Vec<CMat> = (0..=n).map(|p| f.type_projector(&l, p, n - p).matrix().clone()).collect();
            for (x, px) in projs.iter().enumerate() {
                sum += px;
                assert!((px * px - px).camax() < 1e-12);
                for (y, py) in projs.iter().enumerate() {
                    if x != y {
                        assert!((px * py).camax() < 1e-12);
                    }
                }
            }
            assert!((sum - a.degree_projector(n)).camax() < 1e-12);
        }
    }
}

#[test]
fn invariant_two_forms_are_of_type_one_one_for_every_structure() {
    let f = make_frame();
    let p = f.su2_invariant_projector();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let structures: Vec<_> = (0..20).map(|_| f.random_induced(&mut rng)).collect();
    let range = f.algebra().degree_range(2);
    for b in range.clone() {
        let mut e = vec![C64::new(0.0, 0.0); 16];
        e[b] = C64::new(1.0, 0.0);
        let inv = p.apply(&e);
        let non_inv: Vec<C64> = e.iter().zip(&inv).map(|(x, y)| x - y).collect();
        for l in &structures {
            let p11 = f.type_projector(l, 1, 1);
            let back = p11.apply(&inv);
            assert!(back.iter().zip(&inv).all(|(x, y)| (x - y).norm() < 1e-12));
        }
        // The Kähler directions are (1,1) only for their own structure.
        if non_inv.iter().any(|z| z.norm() > 1e-12) {
            let fails = structures.iter().any(|l| {
                let img = f.type_projector(l, 1, 1).apply(&non_inv);
                img.iter().zip(&non_inv).any(|(x, y)| (x - y).norm() > 1e-6)
            });
            assert!(fails);
        }
    }
}

proptest! {
    #[test]
    fn commutator_of_ad_operators_is_twice_ad_of_the_cross_product(l in unit_triple(), m in unit_triple()) {
        let f = make_frame();
        let n = cross(l, m);
        let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        prop_assume!(nn > 1e-6);
        let lo = f.induced(l[0], l[1], l[2]).unwrap();
        let mo = f.induced(m[0], m[1], m[2]).unwrap();
        let no = f.induced(n[0] / nn, n[1] / nn, n[2] / nn).unwrap();
        let al = f.ad_full(&lo).matrix().clone();
        let am = f.ad_full(&mo).matrix().clone();
        let an = f.ad_full(&no).matrix() * C64::new(2.0 * nn, 0.0);
        prop_assert!((&al * &am - &am * &al - an).camax() < 1e-12);
    }

    #[test]
    fn kahler_form_is_linear_in_the_structure(l in unit_triple()) {
        let f = make_frame();
        let w = f.kahler_form(&f.induced(l[0], l[1], l[2]).unwrap());
        let wi = f.kahler_form(&f.structure_i());
        let wj = f.kahler_form(&f.structure_j());
        let wk = f.kahler_form(&f.structure_k());
        for idx in 0..16 {
            let want = wi[idx] * l[0] + wj[idx] * l[1] + wk[idx] * l[2];
            prop_assert!((w[idx] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn induced_structures_square_to_minus_one(l in unit_triple()) {
        let f = make_frame();
        let s = f.induced(l[0], l[1], l[2]).unwrap();
        prop_assert!(s.square_residual() < 1e-12);
    }
}

#[test]
fn quaternion_ad_identities_on_every_degree() {
    let f = make_frame();
    for p in 0..=4 {
        let ai = f.ad_operator(&f.structure_i(), p).matrix().clone();
        let aj = f.ad_operator(&f.structure_j(), p).matrix().clone();
        let ak = f.ad_operator(&f.structure_k(), p).matrix().clone();
        assert!((&ai * &aj - &aj * &ai - &ak * C64::new(2.0, 0.0)).camax() < 1e-12);
    }
    let q = Quaternion::new(0.5, 0.5, 0.5, 0.5);
    assert!((f.unit_quaternion_matrix(&q) * f.unit_quaternion_matrix(&q.conjugate()) - DMatrix::<f64>::identity(4, 4)).camax() < 1e-15);
}
