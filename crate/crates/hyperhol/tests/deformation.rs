use hyperhol::connections::{apply, BundleKind, HermitianConnection, OperatorKind};
use hyperhol::deformation::*;
use hyperhol::error::HyperholError;
use hyperhol::exterior::{CMat, C64};
use hyperhol::spectral_fields::{random_form, MatrixForm, FRAME};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn flat_end(cutoff: i32) -> HermitianConnection {
    HermitianConnection::zero(2, cutoff, BundleKind::Endomorphism)
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// `X dz₁ + Y dz₂` with `dz₁ = dx₁ − √−1dx₂`, `dz₂ = dx₃ − √−1dx₄`.
fn constant_rho(cutoff: i32, x: &CMat, y: &CMat) -> MatrixForm {
    let mi = C64::new(0.0, -1.0);
    let mut f = MatrixForm::zero(x.nrows(), 1, cutoff);
    f.add_matrix([0; 4], 0, x);
    f.add_matrix([0; 4], 1, &(x * mi));
    f.add_matrix([0; 4], 2, y);
    f.add_matrix([0; 4], 3, &(y * mi));
    f
}

/// `ρ = ∂s` for a random `End(B)`-valued function with three Fourier modes.
fn exact_rho(conn: &HermitianConnection, amplitude: f64, seed: u64) -> MatrixForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = random_form(&mut rng, 2, 0, conn.cutoff(), 1, Some(3), 1.0);
    s.set_block([0; 4], vec![C64::new(0.0, 0.0); 4]);
    let rho = apply(&OperatorKind::Partial(FRAME.structure_i()), conn, &s).unwrap();
    rho.scale_re(amplitude / rho.norm())
}

/// Independent oracle: `‖ι(ρ,ρ)‖ = ‖[X,Y] dz₁∧dz₂‖ = 2‖[X,Y]‖` and
/// `‖ρ‖² = 2(‖X‖² + ‖Y‖²)`.
fn commutator_oracle(x: &CMat, y: &CMat, tol: f64) -> bool {
    let c = x * y - y * x;
    2.0 * c.norm() <= tol * 2.0 * (x.norm_squared() + y.norm_squared())
}

#[test]
fn yoneda_of_constant_forms_is_the_commutator() {
    let conn = flat_end(1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = gaussian(&mut rng, 2);
    let y = gaussian(&mut rng, 2);
    let rho = constant_rho(1, &x, &y);
    let class = yoneda(&conn, &rho, &rho).unwrap();
    // dz₁∧dz₂ = dx₁₃ − √−1dx₁₄ − √−1dx₂₃ − dx₂₄.
    let c = &x * &y - &y * &x;
    let mi = C64::new(0.0, -1.0);
    let mut expected = MatrixForm::zero(2, 2, 1);
    expected.add_matrix([0; 4], MatrixForm::component_index(&[1, 3]), &c);
    expected.add_matrix([0; 4], MatrixForm::component_index(&[1, 4]), &(&c * mi));
    expected.add_matrix([0; 4], MatrixForm::component_index(&[2, 3]), &(&c * mi));
    expected.add_matrix([0; 4], MatrixForm::component_index(&[2, 4]), &(-&c));
    assert!(class.representative.minus(&expected).norm() < 1e-12 * expected.norm());
    assert!(class.harmonicity_residual < 1e-12);
    assert_eq!(class.coefficients.len(), 4);

    let commuting = constant_rho(1, &x, &(&x * C64::new(0.3, -1.2)));
    assert!(yoneda(&conn, &commuting, &commuting).unwrap().representative.norm() < 1e-13);
}

#[test]
fn yoneda_is_symmetric_and_bilinear() {
    let conn = flat_end(1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let r1 = constant_rho(1, &gaussian(&mut rng, 2), &gaussian(&mut rng, 2));
        let r2 = constant_rho(1, &gaussian(&mut rng, 2), &gaussian(&mut rng, 2));
        let a = yoneda(&conn, &r1, &r2).unwrap().representative;
        let b = yoneda(&conn, &r2, &r1).unwrap().representative;
        assert!(a.minus(&b).norm() < 1e-13 * a.norm());
        let c = C64::new(0.7, 0.4);
        let scaled = yoneda(&conn, &r1.scale(c), &r2).unwrap().representative;
        assert!(scaled.minus(&a.scale(c)).norm() < 1e-13 * a.norm());
    }
}

#[test]
fn yoneda_rejects_non_closed_forms() {
    let conn = flat_end(1);
    let mut rho = MatrixForm::zero(2, 1, 1);
    rho.add_matrix([0, 0, 1, 0], 0, &CMat::identity(2, 2));
    rho.add_matrix([0, 0, 1, 0], 1, &(CMat::identity(2, 2) * C64::new(0.0, -1.0)));
    assert!(matches!(yoneda(&conn, &rho, &rho), Err(HyperholError::NotClosed { .. })));
}

#[test]
fn cone_membership_matches_the_commutator_oracle() {
    let conn = flat_end(0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tol = 1e-9;
    let mut disagreements = 0;
    let mut inside = 0;
    for sample in 0..200 {
        let x = gaussian(&mut rng, 2);
        let y = match sample % 4 {
            0 => &x * C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
                + CMat::identity(2, 2) * C64::new(rng.random_range(-1.0..1.0), 0.0),
            1 => &x * &x * C64::new(0.5, 0.0),
            2 => &x + gaussian(&mut rng, 2) * C64::new(1e-4, 0.0),
            _ => gaussian(&mut rng, 2),
        };
        let got = cone_membership(&conn, &constant_rho(0, &x, &y), tol).unwrap();
        let want = commutator_oracle(&x, &y, tol);
        inside += usize::from(want);
        disagreements += usize::from(got.in_cone != want);
    }
    assert_eq!(disagreements, 0);
    assert_eq!(inside, 100);
    let zero = MatrixForm::zero(2, 1, 0);
    assert!(cone_membership(&conn, &zero, tol).unwrap().in_cone);
}

#[test]
fn kuranishi_is_trivial_on_commuting_constant_forms() {
    let conn = flat_end(2);
    let x = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.5)]));
    let y = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(0.1, 0.0), C64::new(0.4, -0.3)]));
    let rho = constant_rho(2, &x, &y);
    let series = kuranishi(&conn, &rho, &KuranishiOptions { max_order: 4, ..Default::default() }).unwrap();
    assert!(series.terms.iter().all(|t| t.norm() == 0.0));
    assert_eq!(series.verdict, SeriesVerdict::Converged);
    assert!(series.residual.equation < 1e-15);
    let ym = deformed_is_yang_mills(&conn, &rho, &KuranishiOptions { max_order: 4, ..Default::default() }).unwrap();
    assert!(ym.integrability < 1e-15 && ym.contraction < 1e-15);
}

#[test]
fn deformation_of_zero_is_zero() {
    let conn = flat_end(1);
    let zero = MatrixForm::zero(2, 1, 1);
    let r = deformation_residual(&conn, &zero, &zero).unwrap();
    assert_eq!(r.equation, 0.0);
    assert_eq!(r.curvature_form, 0.0);
    let ym = deformed_is_yang_mills(&conn, &zero, &KuranishiOptions::default()).unwrap();
    assert_eq!(ym.integrability, 0.0);
    assert_eq!(ym.contraction, 0.0);
}

#[test]
fn kuranishi_series_on_exact_inputs() {
    for (seed, amplitude) in [(0u64, 1e-4), (1, 1e-3), (2, 1e-2)] {
        let conn = flat_end(7);
        let rho = exact_rho(&conn, amplitude, seed);
        let series = kuranishi(&conn, &rho, &KuranishiOptions { max_order: 6, ..Default::default() }).unwrap();
        let r = series.residual;
        assert_eq!(series.verdict, SeriesVerdict::Converged);
        assert!(!series.truncated);
        assert!(series.eta_norm() <= 0.25 * series.rho_norm());
        // Γ on flat (2,0)-forms: Δ_∂ = |k|²/2, so ‖Γ‖ = √2 at unit frequencies.
        assert!((series.gamma_norm - 2f64.sqrt()).abs() < 1e-12);
        assert!(r.agreement <= 1e-10 * r.scale);
        assert!(r.holomorphic_part <= 1e-9 * r.scale);
        for term in &series.term_reports {
            assert!(term.closedness < 1e-10 && term.exactness < 1e-10 && term.left_inverse < 1e-10);
            assert!(term.hat_holomorphic < 1e-10);
            assert!(term.norm_ratio <= 1.0);
        }
        let last = series.term_reports.last().unwrap();
        assert!(last.norm <= 1e-12 * series.rho_norm());
    }
}

#[test]
fn hat_construction_leaves_a_mixed_type_residual() {
    // The (1,1) part of ∇η̂_n is orthogonal to the (1,1) part of Σ η̂_i∧η̂_j,
    // so the deformation equation fails at second order in ρ.
    let conn = flat_end(5);
    let rho = exact_rho(&conn, 1e-3, 11);
    let series = kuranishi(&conn, &rho, &KuranishiOptions { max_order: 4, ..Default::default() }).unwrap();
    for term in &series.term_reports {
        assert!((term.hat_residual - 1.0).abs() < 1e-9);
    }
    let r = series.residual;
    assert!(r.mixed_part > 0.1 * r.scale);
    assert!((r.equation - r.mixed_part).abs() <= 1e-9 * r.scale);
}

#[test]
fn kuranishi_error_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = gaussian(&mut rng, 2);
    let y = gaussian(&mut rng, 2);
    let conn = flat_end(2);
    let rho = constant_rho(2, &x, &y);
    let opts = KuranishiOptions { max_order: 4, ..Default::default() };
    assert!(matches!(kuranishi(&conn, &rho, &opts), Err(HyperholError::ObstructionNonzero { order: 2, .. })));

    let small = flat_end(3);
    let exact = exact_rho(&small, 1e-3, 0);
    assert!(matches!(kuranishi(&small, &exact, &opts), Err(HyperholError::BandwidthOverflow { needed: 5, cutoff: 3 })));
    let series = kuranishi(&small.clone().with_truncation(true), &exact, &opts).unwrap();
    assert!(series.truncated);

    let curved = HermitianConnection::constant_noncommuting(
        BundleKind::Endomorphism,
        2,
        &CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(0.0, 1.0), C64::new(0.0, -1.0)])),
        &CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 0.0)]),
    )
    .unwrap();
    assert!(matches!(
        kuranishi(&curved, &MatrixForm::zero(2, 1, 2), &opts),
        Err(HyperholError::HypothesisViolated { .. })
    ));

    let big = flat_end(7);
    let large = exact_rho(&big, 30.0, 3);
    let res = kuranishi(&big, &large, &KuranishiOptions { max_order: 6, ..Default::default() });
    assert!(matches!(res, Err(HyperholError::SeriesDiverging { .. })), "{res:?}");
}

#[test]
fn series_report_serializes() {
    let conn = flat_end(4);
    let rho = exact_rho(&conn, 1e-3, 7);
    let series = kuranishi(&conn, &rho, &KuranishiOptions { max_order: 3, ..Default::default() }).unwrap();
    let report = series.report().unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: SeriesReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    let exported = HermitianConnection::from_json(&series.connection.to_json()).unwrap();
    assert!(exported.potential().minus(series.connection.potential()).norm() == 0.0);
}

#[test]
fn deformed_connection_of_commuting_non_normal_forms_is_not_yang_mills() {
    // X nilpotent, Y = X: [X,Y] = 0 but [X, X^†] ≠ 0, so Λ(ρ̂∧ρ̂) ≠ 0.
    let conn = flat_end(1);
    let x = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.1, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
    let rho = constant_rho(1, &x, &x);
    let ym = deformed_is_yang_mills(&conn, &rho, &KuranishiOptions { max_order: 0, ..Default::default() }).unwrap();
    assert!(ym.integrability < 1e-15);
    assert!(ym.contraction > 0.1 * ym.scale);
    let non_harmonic = exact_rho(&flat_end(1), 1e-3, 1);
    assert!(matches!(
        deformed_is_yang_mills(&flat_end(1), &non_harmonic, &KuranishiOptions::default()),
        Err(HyperholError::HypothesisViolated { .. })
    ));
}

#[test]
fn canonical_symplectic_form_on_the_line_bundle() {
    let i = C64::new(0.0, 1.0);
    let mut dz1 = MatrixForm::zero(1, 1, 0);
    dz1.add_matrix([0; 4], 0, &CMat::identity(1, 1));
    dz1.add_matrix([0; 4], 1, &(CMat::identity(1, 1) * -i));
    let mut dz2 = MatrixForm::zero(1, 1, 0);
    dz2.add_matrix([0; 4], 2, &CMat::identity(1, 1));
    dz2.add_matrix([0; 4], 3, &(CMat::identity(1, 1) * -i));
    // Λ_c is the adjoint of Ω∧ and Ω = dz₁∧dz₂ has squared norm 4.
    assert!((canonical_symplectic(&dz1, &dz2).unwrap() - C64::new(4.0, 0.0)).norm() < 1e-14);
    assert!((canonical_symplectic(&dz2, &dz1).unwrap() + C64::new(4.0, 0.0)).norm() < 1e-14);
    assert_eq!(canonical_symplectic(&dz1, &dz1).unwrap(), C64::new(0.0, 0.0));

    let t = tangent_structure(&HermitianConnection::zero(1, 1, BundleKind::Fundamental)).unwrap();
    assert_eq!(t.basis.dim(), 2);
    assert!(t.checks.omega_min_singular_value > 1.0);
    assert!((&t.gram - nalgebra::DMatrix::<f64>::identity(4, 4)).norm() < 1e-12);
}

#[test]
fn tangent_structure_on_the_flat_rank_two_bundle() {
    let t = tangent_structure(&flat_end(1)).unwrap();
    let c = t.checks;
    println!("{c:?}");
    assert_eq!(t.basis.dim(), 8);
    assert_eq!(c.real_dim, 16);
    assert!(c.action_leak < 1e-12);
    assert!(c.square_residual < 1e-9 && c.relation_residual < 1e-9);
    assert!(c.metric_symmetry < 1e-12 && c.metric_min_eigenvalue > 0.5);
    assert!(c.metric_invariance < 1e-9);
    assert!(c.omega_skew < 1e-12);
    assert!(c.omega_type_residual < 1e-12);
    assert!((c.omega_i_eigenvalue[0]).abs() < 1e-12 && (c.omega_i_eigenvalue[1].abs() - 1.0).abs() < 1e-12);
    assert!(c.omega_min_singular_value > 1.0);
    assert!(c.omega_determinant > 1.0);
    // Ω is a complex combination of the Kähler forms g(J̄·,·) and g(K̄·,·).
    assert!(c.symplectic_fit_residual < 1e-12);
}
