use hyperhol::connections::{apply, newlander_test, BundleKind, HermitianConnection, Operator, OperatorKind};
use hyperhol::exterior::{CMat, C64};
use hyperhol::spectral_fields::{random_form, MatrixForm, FRAME};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn twisted() -> HermitianConnection {
    HermitianConnection::constant_commuting(2, 2, BundleKind::Endomorphism, [0.3, -0.7, 0.2, 0.5])
}

fn rel(a: &MatrixForm, b: &MatrixForm) -> f64 {
    a.minus(b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn all_first_order_kinds() -> Vec<OperatorKind> {
    let i = FRAME.structure_i();
    let j = FRAME.structure_j();
    vec![
        OperatorKind::Nabla,
        OperatorKind::Partial(i.clone()),
        OperatorKind::Dbar(j.clone()),
        OperatorKind::DC(i),
        OperatorKind::Lefschetz(j.clone()),
        OperatorKind::Contraction(j),
        OperatorKind::LefschetzC,
        OperatorKind::ContractionC,
    ]
}

#[test]
fn adjoints_are_exact_for_every_operator() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let conn = HermitianConnection::seeded_random(2, 3, BundleKind::Endomorphism, 1, 0.3, 3).unwrap();
    for kind in all_first_order_kinds() {
        let shift = kind.degree_shift();
        for p in 0..=4i32 {
            let q = p + shift;
            if !(0..=4).contains(&q) {
                continue;
            }
            let a = random_form(&mut rng, 2, p as usize, 3, 1, Some(4), 1.0);
            let b = random_form(&mut rng, 2, q as usize, 3, 1, Some(4), 1.0);
            let lhs = apply(&kind, &conn, &a).unwrap().l2_inner(&b).unwrap();
            let rhs = a.l2_inner(&apply(&kind.adjoint(), &conn, &b).unwrap()).unwrap();
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0), "{} degree {p}", kind.label());
        }
    }
}

#[test]
fn partial_j_adjoint_is_exact_on_holomorphic_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let conn = twisted();
    let i = FRAME.structure_i();
    for p in 0..2usize {
        let a = random_form(&mut rng, 2, p, 2, 1, Some(5), 1.0).type_part(&i, p, 0);
        let b = random_form(&mut rng, 2, p + 1, 2, 1, Some(5), 1.0).type_part(&i, p + 1, 0);
        for kind in [OperatorKind::PartialJ, OperatorKind::Delta, OperatorKind::DeltaBar] {
            let lhs = apply(&kind, &conn, &a).unwrap().l2_inner(&b).unwrap();
            let rhs = a.l2_inner(&apply(&kind.adjoint(), &conn, &b).unwrap()).unwrap();
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        }
    }
}

#[test]
fn partial_j_rejects_forms_of_other_types() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let a = random_form(&mut rng, 2, 1, 2, 1, Some(3), 1.0);
    assert!(apply(&OperatorKind::PartialJ, &twisted(), &a).is_err());
}

#[test]
fn kodaira_identities_hold_with_this_sign_convention() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let conn = twisted();
    let l = FRAME.random_induced(&mut rng);
    let lam = Operator::new(OperatorKind::Contraction(l.clone()), &conn);
    let d = Operator::new(OperatorKind::Partial(l.clone()), &conn);
    let db = Operator::new(OperatorKind::Dbar(l.clone()), &conn);
    let d_star = Operator::new(OperatorKind::Partial(l.clone()).adjoint(), &conn);
    let db_star = Operator::new(OperatorKind::Dbar(l).adjoint(), &conn);
    for p in 1..=3usize {
        let a = random_form(&mut rng, 2, p, 2, 2, Some(6), 1.0);
        let lhs = lam.apply(&d.apply(&a).unwrap()).unwrap();
        let lhs = if p >= 2 { lhs.minus(&d.apply(&lam.apply(&a).unwrap()).unwrap()) } else { lhs };
        let rhs = db_star.apply(&a).unwrap().scale(C64::new(0.0, -1.0));
        assert!(rel(&lhs, &rhs) < 1e-12, "[Λ, ∂] degree {p}");
        let lhs = lam.apply(&db.apply(&a).unwrap()).unwrap();
        let lhs = if p >= 2 { lhs.minus(&db.apply(&lam.apply(&a).unwrap()).unwrap()) } else { lhs };
        let rhs = d_star.apply(&a).unwrap().scale(C64::new(0.0, 1.0));
        assert!(rel(&lhs, &rhs) < 1e-12, "[Λ, ∂̄] degree {p}");
    }
}

#[test]
fn partial_j_squares_to_zero_and_anticommutes_with_partial() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let conn = twisted();
    let i = FRAME.structure_i();
    let a = random_form(&mut rng, 2, 0, 2, 2, Some(6), 1.0);
    let dj = |x: &MatrixForm| apply(&OperatorKind::PartialJ, &conn, x).unwrap();
    let d = |x: &MatrixForm| apply(&OperatorKind::Partial(i.clone()), &conn, x).unwrap();
    assert!(dj(&dj(&a)).norm() < 1e-12 * a.norm());
    let anti = dj(&d(&a)).plus(&d(&dj(&a)));
    assert!(anti.norm() < 1e-12 * d(&a).norm());
    assert!(dj(&a).norm() > 1e-3);
}

#[test]
fn newlander_test_detects_noncommuting_constant_potential() {
    let x = CMat::from_row_slice(2, 2, &[C64::new(0.0, 1.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, -1.0)]);
    let y = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 0.0)]);
    let conn = HermitianConnection::constant_noncommuting(BundleKind::Fundamental, 2, &x, &y).unwrap();
    let theta = conn.curvature().unwrap();
    let expected = &x * &y - &y * &x;
    assert!((theta.matrix(&[0; 4], MatrixForm::component_index(&[1, 2])) - expected).norm() < 1e-15);
    // Θ ∝ dx₁∧dx₂ is of type (1,1) for I but not for J.
    assert!(newlander_test(&conn, &FRAME.structure_i()).unwrap() < 1e-15);
    assert!(newlander_test(&conn, &FRAME.structure_j()).unwrap() > 0.1);
}

#[test]
fn flat_connection_is_integrable_for_every_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let l = FRAME.random_induced(&mut rng);
        assert_eq!(newlander_test(&twisted(), &l).unwrap(), 0.0);
    }
}

#[test]
fn bianchi_identity_holds_for_random_connections() {
    let conn = HermitianConnection::seeded_random(2, 3, BundleKind::Fundamental, 1, 0.5, 17).unwrap();
    let scale = conn.curvature().unwrap().norm();
    assert!(conn.bianchi_residual().unwrap() < 1e-13 * scale);
}

#[test]
fn connection_json_round_trips() {
    let conn = HermitianConnection::seeded_random(2, 2, BundleKind::Endomorphism, 1, 0.5, 4).unwrap();
    let back = HermitianConnection::from_json(&conn.to_json()).unwrap();
    assert_eq!(back, conn);
}

