//! Deformations of hyperholomorphic connections: the Yoneda pairing, the
//! quadratic cone, the power-series (Kuranishi) recursion
//! `η_n = −Γ(Σ_{i+j=n} η_i∧η_j)` with its hat construction, and the
//! quaternionic structure on the harmonic `(1,0)`-forms with values in
//! `End(B)`.
//!
//! All deformation forms are `End(B)`-valued, so every operator is taken on
//! the endomorphism bundle of the given connection regardless of the bundle
//! kind it was built with.

use crate::connections::{apply, newlander_test, BundleKind, HermitianConnection, Operator, OperatorKind};
use crate::error::{HyperholError, Result};
use crate::exterior::{CMat, C64};
use crate::hodge::{
    gamma_with, holomorphic_laplacian, quaternion_action_matrices, HarmonicBasis, Laplacian,
    HYPOTHESIS_TOLERANCE,
};
use crate::spectral_fields::{check_holomorphic_type, random_form, MatrixForm, RealStructureTag, FRAME};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Relative tolerance of the `∂`-closedness precondition.
pub const CLOSED_TOLERANCE: f64 = 1e-9;
/// Relative tolerance of the exactness (vanishing harmonic part) checks.
pub const EXACT_TOLERANCE: f64 = 1e-9;
/// Default acceptance threshold `‖η_n‖ ≤ tol·‖ρ‖` of the series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;
/// Default cap on the order of the series.
pub const DEFAULT_MAX_ORDER: usize = 12;
/// Number of seeded probes used to measure the norm of `Γ`.
pub const GAMMA_PROBES: usize = 32;
/// Seed of the `Γ`-norm probes.
pub const GAMMA_SEED: u64 = 0x9a3;

const TAG: RealStructureTag = RealStructureTag::Endomorphism;

fn endomorphisms(conn: &HermitianConnection) -> HermitianConnection {
    conn.clone().with_bundle(BundleKind::Endomorphism)
}

fn partial(conn: &HermitianConnection, alpha: &MatrixForm) -> Result<MatrixForm> {
    apply(&OperatorKind::Partial(FRAME.structure_i()), conn, alpha)
}

fn wedge(a: &MatrixForm, b: &MatrixForm, truncate: bool) -> Result<MatrixForm> {
    if truncate {
        a.wedge_truncated(b)
    } else {
        a.wedge(b)
    }
}

/// `σ̂ = σ + T(σ)`, the real form with `(1,0)`-part `σ`.
pub fn hat(sigma: &MatrixForm) -> MatrixForm {
    sigma.plus(&sigma.real_t(TAG))
}

fn require_hyperholomorphic(conn: &HermitianConnection) -> Result<()> {
    for l in [FRAME.structure_i(), FRAME.structure_j(), FRAME.structure_k()] {
        let res = newlander_test(conn, &l)?;
        if res > HYPOTHESIS_TOLERANCE {
            return Err(HyperholError::HypothesisViolated { check: "hyperholomorphy".into(), residual: res });
        }
    }
    Ok(())
}

fn require_closed(conn: &HermitianConnection, rho: &MatrixForm) -> Result<()> {
    check_holomorphic_type(rho)?;
    let n = rho.norm();
    if n == 0.0 {
        return Ok(());
    }
    let res = partial(conn, rho)?.norm() / n;
    if res > CLOSED_TOLERANCE {
        return Err(HyperholError::NotClosed { residual: res });
    }
    Ok(())
}

/// The Yoneda pairing of two classes: the harmonic part of the symmetrized
/// wedge product.
#[derive(Debug, Clone)]
pub struct YonedaClass {
    /// `Π_harm ½(ρ₁∧ρ₂ + ρ₂∧ρ₁)`, a `(2,0)`-form with values in `End(B)`.
    pub representative: MatrixForm,
    /// Coefficients of the representative in the harmonic basis.
    pub coefficients: Vec<C64>,
    /// `‖Δ_∂ representative‖ / ‖representative‖`.
    pub harmonicity_residual: f64,
}

/// The harmonic basis of `End(B)`-valued `(2,0)`-forms.
pub fn yoneda_basis(conn: &HermitianConnection) -> Result<HarmonicBasis> {
    holomorphic_laplacian(&endomorphisms(conn), 2)?.harmonic_basis()
}

/// `ι(ρ₁, ρ₂)` for `∂`-closed `End(B)`-valued `(1,0)`-forms.
pub fn yoneda(conn: &HermitianConnection, rho1: &MatrixForm, rho2: &MatrixForm) -> Result<YonedaClass> {
    let end = endomorphisms(conn);
    require_closed(&end, rho1)?;
    require_closed(&end, rho2)?;
    // The product of (1,0)-forms is of type (2,0); projecting removes round-off.
    let sym = rho1
        .wedge(rho2)?
        .plus(&rho2.wedge(rho1)?)
        .scale_re(0.5)
        .type_part(&FRAME.structure_i(), 2, 0);
    let lap = holomorphic_laplacian(&end, 2)?;
    let representative = lap.harmonic_part(&sym)?;
    let basis = lap.harmonic_basis()?;
    let coefficients = basis.coefficients(&representative);
    let n = representative.norm();
    let harmonicity_residual = if n == 0.0 { 0.0 } else { lap.apply(&representative)?.norm() / n };
    Ok(YonedaClass { representative, coefficients, harmonicity_residual })
}

/// Membership of a class in the quadratic cone `{ι(ρ,ρ) = 0}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ConeMembership {
    /// `‖ι(ρ,ρ)‖ ≤ tol·‖ρ‖²`.
    pub in_cone: bool,
    /// `‖ι(ρ,ρ)‖`.
    pub obstruction_norm: f64,
    /// `‖ρ‖²`.
    pub scale: f64,
}

/// Tests `‖ι(ρ,ρ)‖ ≤ tol·‖ρ‖²`.
pub fn cone_membership(conn: &HermitianConnection, rho: &MatrixForm, tol: f64) -> Result<ConeMembership> {
    let class = yoneda(conn, rho, rho)?;
    let obstruction_norm = class.representative.norm();
    let scale = rho.norm().powi(2);
    Ok(ConeMembership { in_cone: obstruction_norm <= tol * scale, obstruction_norm, scale })
}

/// Both formulations of the deformation equation
/// `−∇η̂ = ρ̂∧ρ̂ + ρ̂∧η̂ + η̂∧ρ̂ + η̂∧η̂`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DeformationResidual {
    /// `‖∇η̂ + (ρ̂ + η̂)∧(ρ̂ + η̂)‖`.
    pub equation: f64,
    /// `‖Θ(∇ + ρ̂ + η̂) − Θ − ∇ρ̂‖`.
    pub curvature_form: f64,
    /// Norm of the difference of the two residual forms.
    pub agreement: f64,
    /// Norm of the `(2,0) + (0,2)` part of the residual form.
    pub holomorphic_part: f64,
    /// Norm of the `(1,1)` part of the residual form.
    pub mixed_part: f64,
    /// `‖ρ̂‖²`, the natural scale of the residual.
    pub scale: f64,
    /// Whether products were truncated at the working cutoff.
    pub truncated: bool,
}

impl DeformationResidual {
    /// `equation / scale` (zero for `ρ̂ = 0`).
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.equation
        } else {
            self.equation / self.scale
        }
    }
}

/// Residual of the deformation equation for real `End(B)`-valued 1-forms
/// `ρ̂` and `η̂`, evaluated directly and through the curvature of
/// `∇ + ρ̂ + η̂`.  Products are truncated at the cutoff when the connection
/// allows it.
pub fn deformation_residual(
    conn: &HermitianConnection,
    rho_hat: &MatrixForm,
    eta_hat: &MatrixForm,
) -> Result<DeformationResidual> {
    let end = endomorphisms(conn);
    let a = rho_hat.plus(eta_hat);
    let truncated = 2 * a.bandwidth() > a.cutoff();
    let trunc = end.allows_truncation();
    let direct = apply(&OperatorKind::Nabla, &end, eta_hat)?.plus(&wedge(&a, &a, trunc)?);
    let theta = end.curvature()?;
    let shifted = end.shifted(&a)?;
    let via_curvature = shifted
        .curvature()?
        .minus(&theta)
        .minus(&apply(&OperatorKind::Nabla, &end, rho_hat)?);
    let i = FRAME.structure_i();
    let mixed = direct.type_part(&i, 1, 1);
    Ok(DeformationResidual {
        equation: direct.norm(),
        curvature_form: via_curvature.norm(),
        agreement: direct.minus(&via_curvature).norm(),
        holomorphic_part: direct.minus(&mixed).norm(),
        mixed_part: mixed.norm(),
        scale: rho_hat.norm().powi(2),
        truncated: truncated && trunc,
    })
}

/// Largest observed `‖Γτ‖ / ‖τ‖` over seeded `(p,0)`-probes without
/// harmonic part.
pub fn gamma_norm(conn: &HermitianConnection, degree: usize, probes: usize, seed: u64) -> Result<f64> {
    let end = endomorphisms(conn);
    let lap = holomorphic_laplacian(&end, degree)?;
    gamma_norm_with(&lap, probes, seed)
}

fn gamma_norm_with(lap: &Laplacian, probes: usize, seed: u64) -> Result<f64> {
    let conn = lap.connection();
    let p = lap.domain().degree();
    let i = FRAME.structure_i();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for j in 0..probes {
        let raw = if j < 4 && conn.cutoff() > 0 {
            // Unit frequencies first: on flat backgrounds they carry the
            // smallest nonzero eigenvalue and hence the norm of Γ.
            let mut k = [0; 4];
            k[j] = 1;
            let mono = random_form(&mut rng, conn.rank(), p, 0, 0, None, 1.0);
            let mut f = MatrixForm::zero(conn.rank(), p, conn.cutoff());
            f.set_block(k, mono.block(&[0; 4]).cloned().unwrap_or_default());
            f
        } else {
            let bw = (1 + (j as i32) % conn.cutoff().max(1)).min(conn.cutoff());
            random_form(&mut rng, conn.rank(), p, conn.cutoff(), bw, Some(1 + j % 4), 1.0)
        }
        .type_part(&i, p, 0);
        let tau = raw.minus(&lap.harmonic_part(&raw)?);
        let n = tau.norm();
        if n > 0.0 {
            worst = worst.max(gamma_with(lap, &tau)?.norm() / n);
        }
    }
    Ok(worst)
}

/// Options of [`kuranishi`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct KuranishiOptions {
    /// Highest order `n` of `η_n`.
    pub max_order: usize,
    /// Stop once `‖η_n‖ ≤ tol·‖ρ‖`.
    pub tol: f64,
    /// Number of probes measuring the norm of `Γ`.
    pub gamma_probes: usize,
}

impl Default for KuranishiOptions {
    fn default() -> Self {
        KuranishiOptions { max_order: DEFAULT_MAX_ORDER, tol: DEFAULT_SERIES_TOL, gamma_probes: GAMMA_PROBES }
    }
}

/// Diagnostics of one term `η_n` of the series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct SeriesTerm {
    /// Order `n`.
    pub order: usize,
    /// `‖η_n‖`.
    pub norm: f64,
    /// `‖τ_n‖`, `τ_n = Σ_{i+j=n} η_i∧η_j`.
    pub tau_norm: f64,
    /// `‖∂τ_n‖ / ‖τ_n‖`.
    pub closedness: f64,
    /// `‖Π_harm τ_n‖ / ‖τ_n‖`.
    pub exactness: f64,
    /// `‖∂η_n + τ_n‖ / ‖τ_n‖` (`∂Γ` is the identity on exact forms).
    pub left_inverse: f64,
    /// `‖∇η̂_n + Σ η̂_i∧η̂_j‖ / ‖Σ η̂_i∧η̂_j‖`, the hat construction.
    pub hat_residual: f64,
    /// The `(2,0) + (0,2)` part of the hat residual, relative.
    pub hat_holomorphic: f64,
    /// `‖η_n‖ / (gammaNorm·Σ_{i+j=n} ‖η_i‖‖η_j‖)`.
    pub norm_ratio: f64,
}

/// How the series stopped.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub enum SeriesVerdict {
    /// The last term fell below `tol·‖ρ‖`.
    Converged,
    /// `max_order` was reached with decreasing terms.
    MaxOrderReached,
}

/// The series `η = Σ_{n≥2} η_n` built from `ρ`.
#[derive(Debug, Clone)]
pub struct DeformationSeries {
    /// The input `ρ = η₁`.
    pub rho: MatrixForm,
    /// `η₂, η₃, …`.
    pub terms: Vec<MatrixForm>,
    /// Per-term diagnostics, aligned with `terms`.
    pub term_reports: Vec<SeriesTerm>,
    /// The partial sum `η`.
    pub eta: MatrixForm,
    /// Residuals of the deformation equation for `ρ̂` and `η̂`.
    pub residual: DeformationResidual,
    /// Measured norm of `Γ` on `(2,0)`-forms.
    pub gamma_norm: f64,
    /// Stopping reason.
    pub verdict: SeriesVerdict,
    /// Whether the recursion itself truncated products at the cutoff.
    pub truncated: bool,
    /// The deformed connection `∇ + ρ̂ + η̂` (on `End(B)`).
    pub connection: HermitianConnection,
}

/// Serializable summary of a [`DeformationSeries`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeriesReport {
    /// `‖ρ‖`.
    pub rho_norm: f64,
    /// `‖ρ∧ρ‖`.
    pub rho_square_norm: f64,
    /// `‖η‖`.
    pub eta_norm: f64,
    /// Per-term diagnostics.
    pub terms: Vec<SeriesTerm>,
    /// Residuals of the deformation equation.
    pub residual: DeformationResidual,
    /// Measured norm of `Γ`.
    pub gamma_norm: f64,
    /// Stopping reason.
    pub verdict: SeriesVerdict,
    /// Whether the recursion truncated products.
    pub truncated: bool,
}

impl DeformationSeries {
    /// `‖ρ‖`.
    pub fn rho_norm(&self) -> f64 {
        self.rho.norm()
    }

    /// `‖η‖`.
    pub fn eta_norm(&self) -> f64 {
        self.eta.norm()
    }

    /// Serializable summary.
    pub fn report(&self) -> Result<SeriesReport> {
        let trunc = self.truncated || 2 * self.rho.bandwidth() > self.rho.cutoff();
        Ok(SeriesReport {
            rho_norm: self.rho_norm(),
            rho_square_norm: wedge(&self.rho, &self.rho, trunc)?.norm(),
            eta_norm: self.eta_norm(),
            terms: self.term_reports.clone(),
            residual: self.residual,
            gamma_norm: self.gamma_norm,
            verdict: self.verdict,
            truncated: self.truncated,
        })
    }
}

/// Runs the recursion `η₁ = ρ`, `η_n = −Γ(τ_n)`, `τ_n = Σ_{i+j=n} η_i∧η_j`
/// (so that `∂η_n = −τ_n`), checks every `τ_n` for closedness and
/// exactness, assembles `η̂ = Σ (η_n + T η_n)` and evaluates the deformation
/// equation for the result.
///
/// The recursion is exact while `(max_order + 1)·bandwidth(ρ)` fits in the
/// cutoff; beyond that the connection must allow truncation, which is then
/// recorded.  The final residual always drops frequencies beyond the
/// cutoff, which only affects orders above `max_order`.
pub fn kuranishi(conn: &HermitianConnection, rho: &MatrixForm, opts: &KuranishiOptions) -> Result<DeformationSeries> {
    let end = endomorphisms(conn);
    require_hyperholomorphic(&end)?;
    check_holomorphic_type(rho)?;
    let needed = (opts.max_order as i32 + 1) * rho.bandwidth();
    let truncated = needed > end.cutoff();
    if truncated && !end.allows_truncation() {
        return Err(HyperholError::BandwidthOverflow { needed, cutoff: end.cutoff() });
    }
    let rho_norm = rho.norm();
    let lap = holomorphic_laplacian(&end, 2)?;
    let gamma_norm = gamma_norm_with(&lap, opts.gamma_probes, GAMMA_SEED)?;
    let mut etas: Vec<MatrixForm> = vec![rho.clone()];
    let mut hats: Vec<MatrixForm> = vec![hat(rho)];
    let mut reports = Vec::new();
    let mut verdict = SeriesVerdict::MaxOrderReached;
    let mut rising = 0usize;
    if rho_norm > 0.0 {
        for n in 2..=opts.max_order.max(1) {
            let mut tau = MatrixForm::zero(rho.rank(), 2, rho.cutoff());
            let mut tau_hat = tau.clone();
            let mut norm_bound = 0.0;
            for i in 1..n {
                let j = n - i;
                tau = tau.plus(&wedge(&etas[i - 1], &etas[j - 1], truncated)?);
                tau_hat = tau_hat.plus(&wedge(&hats[i - 1], &hats[j - 1], truncated)?);
                norm_bound += etas[i - 1].norm() * etas[j - 1].norm();
            }
            let tau_norm = tau.norm();
            let rel = |x: f64| if tau_norm > 0.0 { x / tau_norm } else { x };
            let closedness = rel(partial(&end, &tau)?.norm());
            if closedness > CLOSED_TOLERANCE {
                return Err(HyperholError::NotClosed { residual: closedness });
            }
            let (green, harmonic) = lap.green_and_harmonic(&tau)?;
            let exactness = rel(harmonic.norm());
            if exactness > EXACT_TOLERANCE {
                return Err(HyperholError::ObstructionNonzero { order: n, residual: exactness });
            }
            let op = Operator::new(
                OperatorKind::Partial(FRAME.structure_i()).adjoint(),
                &end,
            );
            let eta_n = op.apply(&green)?.scale_re(-1.0);
            let left_inverse = rel(partial(&end, &eta_n)?.plus(&tau).norm());
            let eta_hat = hat(&eta_n);
            let hat_form = apply(&OperatorKind::Nabla, &end, &eta_hat)?.plus(&tau_hat);
            let hat_mixed = hat_form.type_part(&FRAME.structure_i(), 1, 1);
            let hat_scale = tau_hat.norm().max(f64::MIN_POSITIVE);
            let norm = eta_n.norm();
            let denom = gamma_norm * norm_bound;
            reports.push(SeriesTerm {
                order: n,
                norm,
                tau_norm,
                closedness,
                exactness,
                left_inverse,
                hat_residual: if tau_norm > 0.0 { hat_form.norm() / hat_scale } else { hat_form.norm() },
                hat_holomorphic: if tau_norm > 0.0 {
                    hat_form.minus(&hat_mixed).norm() / hat_scale
                } else {
                    hat_form.minus(&hat_mixed).norm()
                },
                norm_ratio: if denom > 0.0 { norm / denom } else { 0.0 },
            });
            let previous = etas[n - 2].norm();
            etas.push(eta_n);
            hats.push(eta_hat);
            if norm <= opts.tol * rho_norm {
                verdict = SeriesVerdict::Converged;
                break;
            }
            if n > 2 && norm > previous {
                rising += 1;
                if rising >= 3 {
                    return Err(HyperholError::SeriesDiverging { order: n });
                }
            } else {
                rising = 0;
            }
        }
    } else {
        verdict = SeriesVerdict::Converged;
    }
    let mut eta = MatrixForm::zero(rho.rank(), 1, rho.cutoff());
    for e in &etas[1..] {
        eta = eta.plus(e);
    }
    let rho_hat = hat(rho);
    let eta_hat = hat(&eta);
    let trunc_end = end.clone().with_truncation(true);
    let residual = deformation_residual(&trunc_end, &rho_hat, &eta_hat)?;
    let connection = end.shifted(&rho_hat.plus(&eta_hat))?.with_truncation(end.allows_truncation());
    Ok(DeformationSeries {
        rho: rho.clone(),
        terms: etas[1..].to_vec(),
        term_reports: reports,
        eta,
        residual,
        gamma_norm,
        verdict,
        truncated,
        connection,
    })
}

/// Integrability and Yang–Mills residuals of the deformed connection.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct YangMillsResiduals {
    /// `‖Π^{0,2}Θ′‖`.
    pub integrability: f64,
    /// `‖ΛΘ′‖`.
    pub contraction: f64,
    /// `‖ρ‖²`.
    pub scale: f64,
    /// `‖Δ_∂ρ‖ / ‖ρ‖`.
    pub harmonicity: f64,
}

/// Runs [`kuranishi`] on a `Δ_∂`-harmonic `ρ` and measures whether
/// `∇′ = ∇ + ρ̂ + η̂` is integrable and Yang–Mills for `I`.
pub fn deformed_is_yang_mills(
    conn: &HermitianConnection,
    rho: &MatrixForm,
    opts: &KuranishiOptions,
) -> Result<YangMillsResiduals> {
    let end = endomorphisms(conn);
    let lap = holomorphic_laplacian(&end, 1)?;
    let n = rho.norm();
    let harmonicity = if n > 0.0 { lap.apply(rho)?.norm() / n } else { 0.0 };
    if harmonicity > HYPOTHESIS_TOLERANCE {
        return Err(HyperholError::HypothesisViolated { check: "harmonic input".into(), residual: harmonicity });
    }
    let series = kuranishi(conn, rho, opts)?;
    let i = FRAME.structure_i();
    let theta = series.connection.clone().with_truncation(true).curvature()?;
    let contraction = apply(&OperatorKind::Contraction(i.clone()), &series.connection, &theta)?.norm();
    Ok(YangMillsResiduals {
        integrability: theta.type_part(&i, 0, 2).norm(),
        contraction,
        scale: n * n,
        harmonicity,
    })
}

/// The quaternionic structure on harmonic `End(B)`-valued `(1,0)`-forms.
#[derive(Debug, Clone)]
pub struct TangentStructure {
    /// Orthonormal harmonic basis `h_1…h_m`.
    pub basis: HarmonicBasis,
    /// Real matrices of `I, J̄, K̄` on the real basis `h_a, √−1 h_a`.
    pub actions: [DMatrix<f64>; 3],
    /// Real Gram matrix `Re⟨e_a, e_b⟩`.
    pub gram: DMatrix<f64>,
    /// `Ω(h_a, h_b) = ∫ Tr Λ_c(h_a∧h_b)` on the complex basis.
    pub omega: CMat,
    /// `Ω` on the real basis.
    pub omega_real: CMat,
    /// Invariant checks.
    pub checks: TangentChecks,
}

/// Invariant checks of a [`TangentStructure`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TangentChecks {
    /// Real dimension `2m`.
    pub real_dim: usize,
    /// Largest relative component leaving the harmonic space under `I, J̄, K̄`.
    pub action_leak: f64,
    /// `max(‖I² + 1‖, ‖J̄² + 1‖, ‖K̄² + 1‖)`.
    pub square_residual: f64,
    /// `max(‖IJ̄ − K̄‖, ‖J̄I + K̄‖)`.
    pub relation_residual: f64,
    /// `‖G − Gᵀ‖`.
    pub metric_symmetry: f64,
    /// Smallest eigenvalue of `G`.
    pub metric_min_eigenvalue: f64,
    /// `max_Q ‖QᵀGQ − G‖` over `Q ∈ {I, J̄, K̄}`.
    pub metric_invariance: f64,
    /// `‖Ω + Ωᵀ‖ / ‖Ω‖`.
    pub omega_skew: f64,
    /// `c` fitted to `Ω(Iu, v) = c·Ω(u, v)`.
    pub omega_i_eigenvalue: [f64; 2],
    /// `max(‖Ω(I·,·) − cΩ‖, ‖Ω(·,I·) − cΩ‖) / ‖Ω‖`.
    pub omega_type_residual: f64,
    /// Smallest singular value of `Ω` on the complex basis.
    pub omega_min_singular_value: f64,
    /// `|det Ω|` on the complex basis.
    pub omega_determinant: f64,
    /// Relative residual of the fit `Ω = a·G(J̄·,·) + b·G(K̄·,·)` on the real basis.
    pub symplectic_fit_residual: f64,
}

/// `Ω(α, β) = ∫ Tr Λ_c(α∧β) dVol`, the zero mode of the pointwise trace.
pub fn canonical_symplectic(alpha: &MatrixForm, beta: &MatrixForm) -> Result<C64> {
    let lc = FRAME.contraction_c().matrix().clone();
    let scalar = alpha.wedge_truncated(beta)?.apply_fiber(&lc, 0).trace();
    Ok(scalar.block(&[0; 4]).map(|b| b[0]).unwrap_or(C64::new(0.0, 0.0)))
}

/// Builds the quaternion action, metric and canonical symplectic form on the
/// harmonic `End(B)`-valued `(1,0)`-forms of a hyperholomorphic connection.
pub fn tangent_structure(conn: &HermitianConnection) -> Result<TangentStructure> {
    let end = endomorphisms(conn);
    require_hyperholomorphic(&end)?;
    let basis = holomorphic_laplacian(&end, 1)?.harmonic_basis()?;
    let m = basis.dim();
    let ([ia, ja, ka], action_leak) = quaternion_action_matrices(&basis, TAG)?;
    let real_basis: Vec<MatrixForm> = basis
        .forms
        .iter()
        .cloned()
        .chain(basis.forms.iter().map(|h| h.scale(C64::new(0.0, 1.0))))
        .collect();
    let n = 2 * m;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut omega_real = CMat::zeros(n, n);
    for (a, ea) in real_basis.iter().enumerate() {
        for (b, eb) in real_basis.iter().enumerate() {
            gram[(a, b)] = ea.l2_inner(eb)?.re;
            omega_real[(a, b)] = canonical_symplectic(ea, eb)?;
        }
    }
    let omega = omega_real.view((0, 0), (m, m)).into_owned();
    let id = DMatrix::<f64>::identity(n, n);
    let square_residual = (&ia * &ia + &id).norm().max((&ja * &ja + &id).norm()).max((&ka * &ka + &id).norm());
    let relation_residual = (&ia * &ja - &ka).norm().max((&ja * &ia + &ka).norm());
    let metric_symmetry = (&gram - gram.transpose()).norm();
    let metric_min_eigenvalue = if n == 0 {
        0.0
    } else {
        gram.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let metric_invariance = [&ia, &ja, &ka]
        .iter()
        .map(|q| (q.transpose() * &gram * *q - &gram).norm())
        .fold(0.0, f64::max);
    let omega_norm = omega_real.norm().max(f64::MIN_POSITIVE);
    let omega_skew = (&omega_real + omega_real.transpose()).norm() / omega_norm;
    let complexify = |x: &DMatrix<f64>| x.map(|v| C64::new(v, 0.0));
    let ic = complexify(&ia);
    let left = ic.transpose() * &omega_real;
    let right = &omega_real * &ic;
    let c = omega_real.dotc(&left) / C64::new(omega_norm * omega_norm, 0.0);
    let omega_type_residual =
        (&left - &omega_real * c).norm().max((&right - &omega_real * c).norm()) / omega_norm;
    let svd = omega.clone().svd(false, false);
    let omega_min_singular_value = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    let omega_determinant = omega.determinant().norm();
    let mj = complexify(&(ja.transpose() * &gram));
    let mk = complexify(&(ka.transpose() * &gram));
    let symplectic_fit_residual = fit_residual(&omega_real, &mj, &mk);
    Ok(TangentStructure {
        basis,
        actions: [ia, ja, ka],
        gram,
        omega,
        omega_real,
        checks: TangentChecks {
            real_dim: n,
            action_leak,
            square_residual,
            relation_residual,
            metric_symmetry,
            metric_min_eigenvalue: if n == 0 { 0.0 } else { metric_min_eigenvalue },
            metric_invariance,
            omega_skew,
            omega_i_eigenvalue: [c.re, c.im],
            omega_type_residual,
            omega_min_singular_value: if m == 0 { 0.0 } else { omega_min_singular_value },
            omega_determinant,
            symplectic_fit_residual,
        },
    })
}

/// Relative residual of the least-squares fit `w ≈ a·x + b·y` with complex
/// `a, b`.
fn fit_residual(w: &CMat, x: &CMat, y: &CMat) -> f64 {
    let g = nalgebra::Matrix2::new(x.dotc(x), x.dotc(y), y.dotc(x), y.dotc(y));
    let rhs = nalgebra::Vector2::new(x.dotc(w), y.dotc(w));
    let Some(sol) = g.try_inverse().map(|inv| inv * rhs) else {
        return 1.0;
    };
    let fit = x * sol[0] + y * sol[1];
    (w - fit).norm() / w.norm().max(f64::MIN_POSITIVE)
}
