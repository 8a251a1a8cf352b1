//! The experiments: each turns a validated configuration into checks, a
//! data section and optional extra files.

use crate::config::{ConnectionSpec, ExperimentConfig};
use crate::oracle;
use crate::report::CheckEntry;
use crate::Experiment;
use hyperhol::connections::{apply, BundleKind, HermitianConnection, OperatorKind};
use hyperhol::deformation::{cone_membership, kuranishi, tangent_structure, KuranishiOptions, SeriesVerdict};
use hyperhol::error::{HyperholError, Result};
use hyperhol::exterior::{CMat, C64};
use hyperhol::hodge::{
    band_safe_bandwidth, holomorphic_harmonic_bases, identity_suite, pq_cohomology, sl2_action, SuiteOptions,
};
use hyperhol::hyperholomorphic::{
    analyze, bg_functional, degree_slope, flat_perturbation, traceless_and_projective, yang_mills_flow, BgOptions,
    FlowOptions, PointwiseTwoForm,
};
use hyperhol::spectral_fields::{random_form, MatrixForm, FRAME};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

/// Result of an experiment before it is wrapped into a report.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// Checks in execution order.
    pub checks: Vec<CheckEntry>,
    /// Experiment-specific measurements.
    pub data: Value,
    /// Extra files `(name, contents)` written next to the report.
    pub files: Vec<(String, String)>,
}

/// Builds the background connection of a configuration.
pub fn build_connection(config: &ExperimentConfig) -> Result<HermitianConnection> {
    let (rank, cutoff, bundle) = (config.rank, config.cutoff, config.bundle);
    let conn = match &config.connection {
        ConnectionSpec::Zero => HermitianConnection::zero(rank, cutoff, bundle),
        ConnectionSpec::ConstantCommuting { theta } => HermitianConnection::constant_commuting(rank, cutoff, bundle, *theta),
        ConnectionSpec::ConstantNoncommuting { x, y } => {
            HermitianConnection::constant_noncommuting(bundle, cutoff, &to_matrix(x), &to_matrix(y))?
        }
        ConnectionSpec::SeededRandom { bandwidth, amplitude } => {
            HermitianConnection::seeded_random(rank, cutoff, bundle, *bandwidth, *amplitude, config.seed)?
        }
        ConnectionSpec::File { path } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HyperholError::ConfigInvalid(format!("cannot read connection file {path}: {e}")))?;
            let conn = HermitianConnection::from_json(&text)?;
            if conn.rank() != rank || conn.cutoff() != cutoff || conn.bundle() != bundle {
                return Err(HyperholError::ConfigInvalid(format!(
                    "connection file has rank {}, cutoff {} and bundle {:?}; the configuration says {rank}, {cutoff} and {bundle:?}",
                    conn.rank(),
                    conn.cutoff(),
                    conn.bundle()
                )));
            }
            conn
        }
    };
    Ok(conn.with_truncation(config.allow_truncation))
}

fn to_matrix(rows: &[Vec<[f64; 2]>]) -> CMat {
    let n = rows.len();
    CMat::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1]))
}

/// Runs an experiment.
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    match config.experiment {
        Experiment::Identities => identities(config),
        Experiment::Analyze => analyze_experiment(config),
        Experiment::Bg => bg(config),
        Experiment::Kuranishi => kuranishi_experiment(config),
        Experiment::Cone => cone(config),
        Experiment::Sl2 => sl2(config),
        Experiment::Tangent => tangent(config),
        Experiment::Flow => flow(config),
        Experiment::PqTable => pq_table(config),
    }
}

fn identities(config: &ExperimentConfig) -> Result<Outcome> {
    let conn = build_connection(config)?;
    let opts = SuiteOptions::standard(config.samples, config.seed, config.extra_structures);
    let results = identity_suite(&conn, &opts)?;
    let tol = config.tolerances.identity * config.tolerances.scale;
    let checks = results
        .iter()
        .map(|c| {
            CheckEntry::at_most(
                &c.name,
                c.residual,
                tol,
                format!("largest relative residual over {} samples; hypothesis: {}", c.samples, c.hypothesis),
            )
        })
        .collect();
    let structures: Vec<[f64; 3]> = opts.structures.iter().map(|l| l.coeffs()).collect();
    Ok(Outcome {
        checks,
        data: json!({
            "band_safe_bandwidth": band_safe_bandwidth(&conn)?,
            "structures": structures,
            "samples": config.samples,
        }),
        files: Vec::new(),
    })
}

fn analyze_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    let conn = build_connection(config)?;
    let report = analyze(&conn)?;
    let tol = config.tolerances.identity * config.tolerances.scale;
    let theta_norm = report.curvature_norm;
    let bianchi = conn.bianchi_residual()?;
    let bianchi_rel = if theta_norm > 0.0 { bianchi / theta_norm } else { bianchi };
    let max_contraction = report.contraction_norms.iter().cloned().fold(0.0, f64::max);
    let max_integrability = report.integrability.iter().map(|x| x.2).fold(0.0, f64::max);
    let mut checks = vec![CheckEntry::at_most("bianchi-identity", bianchi_rel, tol, "‖∇Θ‖ / ‖Θ‖")];
    let (contraction, integrable) = if report.hyperholomorphic {
        (max_contraction, max_integrability)
    } else {
        (0.0, 0.0)
    };
    let vacuous = if report.hyperholomorphic { "" } else { " (vacuous: the curvature is not invariant)" };
    checks.push(CheckEntry::at_most(
        "hyperholomorphic-contraction-free",
        contraction,
        tol,
        format!("largest ‖Λ_L Θ‖ / ‖Θ‖ over I, J, K{vacuous}"),
    ));
    checks.push(CheckEntry::at_most(
        "hyperholomorphic-integrable",
        integrable,
        tol,
        format!("largest non-(1,1) fraction over {} sampled structures{vacuous}", report.integrability.len()),
    ));
    let projective = traceless_and_projective(&conn)?;
    let slopes: Vec<_> = [FRAME.structure_i(), FRAME.structure_j(), FRAME.structure_k()]
        .iter()
        .map(|l| degree_slope(&conn, l).map(|d| json!({"structure": l.label(), "degree": d.degree, "slope": d.slope})))
        .collect::<Result<_>>()?;
    Ok(Outcome {
        checks,
        data: json!({
            "curvature": report,
            "bianchi_residual": bianchi,
            "degree_slope": slopes,
            "projective_residual": projective.projective_residual,
            "end_bundle_residual": projective.end_bundle_residual,
        }),
        files: Vec::new(),
    })
}

fn bg(config: &ExperimentConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let opts = BgOptions { max_projection_fraction: config.bg.max_projection_fraction, ..BgOptions::default() };
    let tol = config.tolerances.bg * config.tolerances.scale;
    let want = config.bg.samples;
    let ranks = &config.bg.ranks;
    let (mut accepted, mut skipped, mut rejected, mut drawn) = (0usize, 0usize, 0usize, 0usize);
    let mut per_rank = vec![0usize; ranks.len()];
    let mut max_functional = f64::NEG_INFINITY;
    let mut min_functional = f64::INFINITY;
    let mut max_projection: f64 = 0.0;
    let mut worst = [0.0f64; 7];
    while accepted < want {
        if drawn >= 10 * want {
            return Err(HyperholError::ConfigInvalid(format!(
                "only {accepted} of {want} samples were accepted after {drawn} draws \
                 ({skipped} with ‖Θ_(2,0)‖ < {}, {rejected} moved too far by the constraint projection)",
                config.bg.min_holomorphic_norm
            )));
        }
        let slot = drawn % ranks.len();
        drawn += 1;
        let s = match bg_functional(&PointwiseTwoForm::random(&mut rng, ranks[slot]), &opts) {
            Ok(s) => s,
            Err(HyperholError::ConstraintProjectionTooLarge { .. }) => {
                rejected += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        if s.theta_20_norm < config.bg.min_holomorphic_norm {
            skipped += 1;
            continue;
        }
        accepted += 1;
        per_rank[slot] += 1;
        let scale = s.theta.norm().powi(2);
        let root = scale.sqrt();
        let ratio = s.functional / scale;
        max_functional = max_functional.max(ratio);
        min_functional = min_functional.min(ratio);
        max_projection = max_projection.max(s.projection_fraction);
        let oracle = oracle::bg_index_loop(&s.theta_20.components);
        let values = [
            (oracle - C64::new(s.functional, s.functional_imaginary)).norm() / scale,
            (s.complete_expansion - s.functional).abs() / scale,
            s.hermitian_residual / root,
            s.trace_residual / root,
            s.full_representation_residual / root,
            s.cross_residual / root,
            s.full_square_residual / scale,
        ];
        for (w, v) in worst.iter_mut().zip(values) {
            *w = w.max(v);
        }
    }
    let n = format!("over {accepted} samples");
    let checks = vec![
        CheckEntry::below("ineq-5.1-bg", max_functional, 0.0, format!("largest functional / ‖Θ‖² {n}")),
        CheckEntry::at_most("bg-index-loop-oracle", worst[0], tol, format!("largest |oracle − functional| / ‖Θ‖² {n}")),
        CheckEntry::at_most("bg-complete-expansion", worst[1], tol, format!("largest |expansion − functional| / ‖Θ‖² {n}")),
        CheckEntry::at_most("bg-hermitian-coefficients", worst[2], tol, format!("largest ‖A_ji − A_ij^†‖ / ‖Θ‖ {n}")),
        CheckEntry::at_most("bg-trace-free", worst[3], tol, format!("largest ‖Σ A_ii‖ / ‖Θ‖ {n}")),
        CheckEntry::at_most("bg-full-representation", worst[4], tol, format!("largest representation residual / ‖Θ‖ {n}")),
        CheckEntry::at_most("bg-cross-reality", worst[5], tol, format!("largest ‖C_ij − B_ij^†‖ / ‖Θ‖ {n}")),
        CheckEntry::at_most("bg-full-square", worst[6], tol, format!("largest full-square residual / ‖Θ‖² {n}")),
    ];
    let counts: Vec<Value> = ranks.iter().zip(&per_rank).map(|(r, c)| json!({"rank": r, "samples": c})).collect();
    Ok(Outcome {
        checks,
        data: json!({
            "accepted": accepted,
            "skipped": skipped,
            "rejected": rejected,
            "per_rank": counts,
            "functional_over_scale": {"max": max_functional, "min": min_functional},
            "max_projection_fraction": max_projection,
        }),
        files: Vec::new(),
    })
}

/// `ρ = ∂s` for a seeded random `End(B)`-valued function `s` of bandwidth 1
/// without constant mode, scaled to norm `amplitude`.
pub fn exact_rho(conn: &HermitianConnection, modes: usize, amplitude: f64, seed: u64) -> Result<MatrixForm> {
    let r = conn.rank();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = random_form(&mut rng, r, 0, conn.cutoff(), 1, Some(modes), 1.0);
    s.set_block([0; 4], vec![C64::new(0.0, 0.0); r * r]);
    let rho = apply(&OperatorKind::Partial(FRAME.structure_i()), conn, &s)?;
    let n = rho.norm();
    Ok(if n > 0.0 { rho.scale_re(amplitude / n) } else { rho })
}

fn kuranishi_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    if config.bundle != BundleKind::Endomorphism {
        return Err(HyperholError::ConfigInvalid("kuranishi deforms End(B): set bundle to \"endomorphism\"".into()));
    }
    if config.cutoff < 1 {
        return Err(HyperholError::ConfigInvalid("kuranishi needs cutoff ≥ 1".into()));
    }
    let conn = build_connection(config)?;
    let k = &config.kuranishi;
    let opts = KuranishiOptions { max_order: k.max_order, gamma_probes: k.gamma_probes, ..KuranishiOptions::default() };
    let scale = config.tolerances.scale;
    let tol = config.tolerances.deformation * scale;
    let smallest = k.amplitudes.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut worst = Worst::default();
    let mut first = None;
    for (ai, &amplitude) in k.amplitudes.iter().enumerate() {
        for s in 0..k.seeds {
            let seed = config.seed.wrapping_mul(1_000_003).wrapping_add((ai * k.seeds + s) as u64);
            let rho = exact_rho(&conn, k.modes, amplitude, seed)?;
            let series = match kuranishi(&conn, &rho, &opts) {
                Ok(series) => series,
                Err(e) => {
                    failures.push(json!({"amplitude": amplitude, "seed": seed, "error": e.to_string()}));
                    continue;
                }
            };
            let report = series.report()?;
            let res = &report.residual;
            let rel = |x: f64| if res.scale > 0.0 { x / res.scale } else { x };
            let ratio = report.eta_norm / report.rho_norm;
            worst.equation = worst.equation.max(res.relative());
            worst.mixed = worst.mixed.max(rel(res.mixed_part));
            worst.holomorphic = worst.holomorphic.max(rel(res.holomorphic_part));
            worst.agreement = worst.agreement.max(rel(res.agreement));
            if amplitude < 10.0 * smallest {
                worst.norm_bound = worst.norm_bound.max(ratio);
            }
            for t in &report.terms {
                worst.closedness = worst.closedness.max(t.closedness);
                worst.exactness = worst.exactness.max(t.exactness);
                worst.left_inverse = worst.left_inverse.max(t.left_inverse);
                worst.hat_holomorphic = worst.hat_holomorphic.max(t.hat_holomorphic);
                worst.norm_ratio = worst.norm_ratio.max(t.norm_ratio);
            }
            if series.verdict != SeriesVerdict::Converged {
                failures.push(json!({"amplitude": amplitude, "seed": seed, "error": "maximum order reached"}));
            }
            runs.push(json!({
                "amplitude": amplitude,
                "seed": seed,
                "rho_norm": report.rho_norm,
                "eta_norm": report.eta_norm,
                "eta_over_rho": ratio,
                "orders": report.terms.len() + 1,
                "verdict": report.verdict,
                "residual_relative": res.relative(),
                "mixed_relative": rel(res.mixed_part),
                "agreement_relative": rel(res.agreement),
                "truncated": report.truncated,
            }));
            if first.is_none() {
                first = Some((report, series.connection.to_json()));
            }
        }
    }
    let total = k.amplitudes.len() * k.seeds;
    let n = format!("over {} of {total} runs", runs.len());
    let checks = vec![
        CheckEntry::at_most(
            "kuranishi-convergence",
            failures.len() as f64,
            0.0,
            format!("{} of {total} runs did not converge to tol·‖ρ‖ within {} orders", failures.len(), k.max_order),
        ),
        CheckEntry::at_most("kuranishi-closedness", worst.closedness, tol, format!("largest ‖∂τ_n‖ / ‖τ_n‖ {n}")),
        CheckEntry::at_most("kuranishi-exactness", worst.exactness, tol, format!("largest harmonic fraction of τ_n {n}")),
        CheckEntry::at_most("kuranishi-left-inverse", worst.left_inverse, tol, format!("largest ‖∂η_n + τ_n‖ / ‖τ_n‖ {n}")),
        CheckEntry::at_most(
            "kuranishi-hat-holomorphic",
            worst.hat_holomorphic,
            tol,
            format!("largest (2,0)+(0,2) part of the per-order hat residual {n}"),
        ),
        CheckEntry::at_most("kuranishi-norm-recursion", worst.norm_ratio, 1.0, format!("largest ‖η_n‖ / (‖Γ‖ Σ‖η_i‖‖η_j‖) {n}")),
        CheckEntry::at_most(
            "deformation-equation-residual",
            worst.equation,
            tol,
            format!(
                "largest ‖∇η̂ + (ρ̂+η̂)∧(ρ̂+η̂)‖ / ‖ρ̂‖² {n}; its (1,1) part reaches {:.3e}·‖ρ̂‖², \
                 its (2,0)+(0,2) part {:.3e}·‖ρ̂‖²",
                worst.mixed, worst.holomorphic
            ),
        ),
        CheckEntry::at_most(
            "deformation-residual-agreement",
            worst.agreement,
            config.tolerances.agreement * scale,
            format!("largest difference of the two residual forms / ‖ρ̂‖² {n}"),
        ),
        CheckEntry::at_most(
            "deformation-norm-bound",
            worst.norm_bound,
            config.tolerances.norm_bound,
            format!("largest ‖η‖ / ‖ρ‖ for amplitudes within a decade of {smallest:e}"),
        ),
    ];
    let mut files = Vec::new();
    let mut data = json!({"runs": runs, "failures": failures});
    if let Some((report, conn_json)) = first {
        data["first_series"] = serde_json::to_value(&report).expect("series reports serialize");
        files.push(("kuranishi-connection.json".to_string(), conn_json));
    }
    Ok(Outcome { checks, data, files })
}

#[derive(Default)]
struct Worst {
    equation: f64,
    mixed: f64,
    holomorphic: f64,
    agreement: f64,
    norm_bound: f64,
    closedness: f64,
    exactness: f64,
    left_inverse: f64,
    hat_holomorphic: f64,
    norm_ratio: f64,
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// `X dz₁ + Y dz₂` with `dz₁ = dx₁ − √−1dx₂`, `dz₂ = dx₃ − √−1dx₄`.
pub fn constant_rho(cutoff: i32, x: &CMat, y: &CMat) -> MatrixForm {
    let mi = C64::new(0.0, -1.0);
    let mut f = MatrixForm::zero(x.nrows(), 1, cutoff);
    f.add_matrix([0; 4], 0, x);
    f.add_matrix([0; 4], 1, &(x * mi));
    f.add_matrix([0; 4], 2, y);
    f.add_matrix([0; 4], 3, &(y * mi));
    f
}

/// The constant family of the cone experiment: a quarter each of commuting
/// pairs `Y = cX + t`, `Y = X²/2`, near-commuting `Y = X + 10⁻⁴G` and
/// generic pairs.
pub fn cone_family(rng: &mut ChaCha8Rng, rank: usize, sample: usize) -> (CMat, CMat) {
    let x = gaussian(rng, rank);
    let y = match sample % 4 {
        0 => &x * C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
            + CMat::identity(rank, rank) * C64::new(rng.random_range(-1.0..1.0), 0.0),
        1 => &x * &x * C64::new(0.5, 0.0),
        2 => &x + gaussian(rng, rank) * C64::new(1e-4, 0.0),
        _ => gaussian(rng, rank),
    };
    (x, y)
}

fn cone(config: &ExperimentConfig) -> Result<Outcome> {
    if config.bundle != BundleKind::Endomorphism || !matches!(config.connection, ConnectionSpec::Zero) {
        return Err(HyperholError::ConfigInvalid(
            "cone runs on the flat End(B): use bundle \"endomorphism\" with the zero connection".into(),
        ));
    }
    let conn = build_connection(config)?;
    let tol = config.tolerances.cone * config.tolerances.scale;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (mut inside, mut disagreements) = (0usize, 0usize);
    let mut max_inside_ratio: f64 = 0.0;
    let mut min_outside_ratio = f64::INFINITY;
    for sample in 0..config.cone.samples {
        let (x, y) = cone_family(&mut rng, config.rank, sample);
        let got = cone_membership(&conn, &constant_rho(config.cutoff, &x, &y), tol)?;
        let want = oracle::cone_by_commutator(&x, &y, tol);
        let ratio = got.obstruction_norm / got.scale;
        if want {
            inside += 1;
            max_inside_ratio = max_inside_ratio.max(ratio);
        } else {
            min_outside_ratio = min_outside_ratio.min(ratio);
        }
        disagreements += usize::from(got.in_cone != want);
    }
    let samples = config.cone.samples;
    Ok(Outcome {
        checks: vec![CheckEntry::at_most(
            "cone-oracle-agreement",
            disagreements as f64,
            0.0,
            format!("disagreements with the commutator oracle over {samples} samples ({inside} in the cone) at tol {tol:e}"),
        )],
        data: json!({
            "samples": samples,
            "in_cone": inside,
            "disagreements": disagreements,
            "max_obstruction_ratio_inside": max_inside_ratio,
            "min_obstruction_ratio_outside": min_outside_ratio,
        }),
        files: Vec::new(),
    })
}

fn sl2(config: &ExperimentConfig) -> Result<Outcome> {
    let conn = build_connection(config)?;
    let bases = holomorphic_harmonic_bases(&conn)?;
    let s = sl2_action(&bases)?;
    let tol = config.tolerances.identity * config.tolerances.scale;
    let weights = s.h_residuals.iter().cloned().fold(0.0, f64::max);
    let asym = s.dims.first().copied().unwrap_or(0).abs_diff(s.dims.get(2).copied().unwrap_or(0));
    let checks = vec![
        CheckEntry::at_most("sl2-weights", weights, tol, format!("largest ‖H − (2 − 2i)‖ on H^i, dims {:?}", s.dims)),
        CheckEntry::at_most("sl2-harmonicity", s.harmonicity_residual, tol, "largest non-harmonic part of L_c h, Λ_c h"),
        CheckEntry::at_most("sl2-dimension-symmetry", asym as f64, 0.0, format!("|dim H⁰ − dim H²|, dims {:?}", s.dims)),
        CheckEntry::above(
            "lefschetz-bijective",
            s.lc_min_singular_value,
            config.tolerances.min_singular_value,
            "smallest singular value of L_c : H⁰ → H²",
        ),
    ];
    let mut csv = String::from("degree,eigenvalue\n");
    for (i, eig) in s.h_eigenvalues.iter().enumerate() {
        for e in eig {
            csv.push_str(&format!("{i},{e:e}\n"));
        }
    }
    Ok(Outcome {
        checks,
        data: serde_json::to_value(&s).expect("sl2 reports serialize"),
        files: vec![("sl2-weights.csv".into(), csv)],
    })
}

fn tangent(config: &ExperimentConfig) -> Result<Outcome> {
    let conn = build_connection(config)?;
    let t = tangent_structure(&conn)?;
    let c = t.checks;
    let tol = config.tolerances.tangent * config.tolerances.scale;
    let lower = config.tolerances.min_singular_value;
    let i_dev = (c.omega_i_eigenvalue[0].powi(2) + (c.omega_i_eigenvalue[1] - 1.0).powi(2)).sqrt();
    let checks = vec![
        CheckEntry::at_most("tangent-action-closed", c.action_leak, tol, format!("largest leak of I, J̄, K̄ out of the harmonic space (real dimension {})", c.real_dim)),
        CheckEntry::at_most(
            "tangent-quaternion-relations",
            c.square_residual.max(c.relation_residual),
            tol,
            "max(‖Q² + 1‖, ‖IJ̄ − K̄‖, ‖J̄I + K̄‖)",
        ),
        CheckEntry::at_most("tangent-metric-symmetric", c.metric_symmetry, tol, "‖G − Gᵀ‖"),
        CheckEntry::above("tangent-metric-positive", c.metric_min_eigenvalue, lower, "smallest eigenvalue of G"),
        CheckEntry::at_most("tangent-metric-invariance", c.metric_invariance, tol, "max ‖QᵀGQ − G‖ over I, J̄, K̄"),
        CheckEntry::at_most("tangent-omega-skew", c.omega_skew, tol, "‖Ω + Ωᵀ‖ / ‖Ω‖"),
        CheckEntry::at_most(
            "tangent-omega-type",
            c.omega_type_residual.max(i_dev),
            tol,
            "type residual of Ω(I·,·) = √−1 Ω and deviation of the fitted eigenvalue from √−1",
        ),
        CheckEntry::above(
            "tangent-omega-nondegenerate",
            c.omega_min_singular_value,
            lower,
            format!("smallest singular value of Ω (|det Ω| = {:e})", c.omega_determinant),
        ),
        CheckEntry::at_most("tangent-symplectic-fit", c.symplectic_fit_residual, tol, "relative residual of Ω = a·G(J̄·,·) + b·G(K̄·,·)"),
    ];
    Ok(Outcome {
        checks,
        data: json!({"checks": c, "complex_dim": t.basis.dim()}),
        files: Vec::new(),
    })
}

fn flow(config: &ExperimentConfig) -> Result<Outcome> {
    let f = &config.flow;
    let mut non_monotone = 0usize;
    let mut worst_final: f64 = 0.0;
    let mut runs = Vec::new();
    let mut csv = String::from("run,step,residual,step_size\n");
    for run in 0..f.runs {
        let seed = config.seed.wrapping_add(run as u64);
        let conn = flat_perturbation(config.bundle, config.rank, config.cutoff, f.amplitude, seed)?;
        let mut opts = FlowOptions::new(f.steps, f.rate, FRAME.structure_i());
        opts.target_residual = f.stop_residual;
        let t = yang_mills_flow(&conn, &opts)?;
        non_monotone += usize::from(!t.is_monotone());
        let first = t.history.first().map(|h| h.residual).unwrap_or(0.0);
        let last = t.history.last().map(|h| h.residual).unwrap_or(0.0);
        worst_final = worst_final.max(last);
        for h in &t.history {
            csv.push_str(&format!("{run},{},{:e},{:e}\n", h.step, h.residual, h.step_size));
        }
        runs.push(json!({
            "seed": seed,
            "initial_residual": first,
            "final_residual": last,
            "steps": t.history.len().saturating_sub(1),
            "halvings": t.halvings,
            "truncated": t.truncated,
        }));
    }
    let checks = vec![
        CheckEntry::at_most("flow-monotone", non_monotone as f64, 0.0, format!("runs with an increasing residual out of {}", f.runs)),
        CheckEntry::at_most(
            "flow-target-reached",
            worst_final,
            config.tolerances.flow * config.tolerances.scale,
            format!("largest final residual over {} runs", f.runs),
        ),
    ];
    Ok(Outcome { checks, data: json!({"runs": runs}), files: vec![("flow.csv".into(), csv)] })
}

fn pq_table(config: &ExperimentConfig) -> Result<Outcome> {
    let conn = build_connection(config)?;
    let rows = pq_cohomology(&conn)?;
    let inconsistent = rows.iter().filter(|r| r.entries.iter().map(|e| e.1).sum::<usize>() != r.total).count();
    let mut csv = String::from("degree,type,dimension,total\n");
    for r in &rows {
        for (label, dim) in &r.entries {
            csv.push_str(&format!("{},{label},{dim},{}\n", r.degree, r.total));
        }
    }
    Ok(Outcome {
        checks: vec![CheckEntry::at_most(
            "pq-table-consistent",
            inconsistent as f64,
            0.0,
            format!("rows whose entries do not sum to the total, out of {}", rows.len()),
        )],
        data: json!({"rows": rows}),
        files: vec![("pq-table.csv".into(), csv)],
    })
}
