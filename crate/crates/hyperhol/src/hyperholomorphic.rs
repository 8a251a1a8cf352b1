//! Diagnostics and constructions around the hyperholomorphy condition:
//! `SU(2)`-invariance of curvature, Yang–Mills residuals, degree and slope,
//! Chern forms, the pointwise Bogomolov–Gieseker functional, projective
//! hyperholomorphy and a gradient flow producing near-hyperholomorphic test
//! connections.
//!
//! The Bogomolov–Gieseker functional is evaluated on the fiber of `ℍ²`
//! (real dimension 8), the smallest quaternionic dimension in which the
//! expansion in the coframe `x_i, x_i′` has off-diagonal terms.

use crate::connections::{BundleKind, HermitianConnection, Operator, OperatorKind};
use crate::error::{HyperholError, Result};
use crate::exterior::{merge_sign, CMat, C64};
use crate::hodge::{Domain, Laplacian, LaplacianKind};
use crate::quaternion_frame::{binary_tetrahedral_group, InducedStructure, QuaternionFrame};
use crate::spectral_fields::{real_part, MatrixForm, RealStructureTag, FIBER, FRAME};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::LazyLock;

/// Relative tolerance of the hyperholomorphy and Yang–Mills verdicts.
pub const VERDICT_TOLERANCE: f64 = 1e-10;
/// Number of random induced structures sampled by [`analyze`].
pub const RANDOM_STRUCTURES: usize = 20;
/// Seed of the random induced structures sampled by [`analyze`].
pub const STRUCTURE_SEED: u64 = 0x5eed;

/// Curvature diagnostics of a connection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// `‖Θ‖`.
    pub curvature_norm: f64,
    /// `(label, (a, b, c), ‖(Π^{2,0}_L + Π^{0,2}_L)Θ‖ / ‖Θ‖)` for `I, J, K`
    /// and seeded random induced structures.
    pub integrability: Vec<(String, [f64; 3], f64)>,
    /// `‖Θ − Π_inv Θ‖ / ‖Θ‖`, the part of the curvature moved by `SU(2)`.
    pub noninvariance: f64,
    /// `‖Λ_L Θ‖ / ‖Θ‖` for `L = I, J, K`.
    pub contraction_norms: [f64; 3],
    /// Degree of the bundle for `I`.
    pub degree: f64,
    /// Slope `deg / r`.
    pub slope: f64,
    /// Relative tolerance of the verdicts.
    pub tolerance: f64,
    /// `SU(2)`-invariant curvature.
    pub hyperholomorphic: bool,
    /// Integrable for `I` with `Λ_I Θ = 0` (the Einstein constant is zero
    /// since every bundle here has degree zero).
    pub yang_mills: bool,
    /// Every sampled structure is integrable.
    pub integrable_for_all_sampled: bool,
}

fn relative(x: f64, scale: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x / scale.max(f64::MIN_POSITIVE)
    }
}

/// `Θ − Π_inv Θ` for a 2-form.
pub fn noninvariant_part(theta: &MatrixForm) -> MatrixForm {
    let proj = FRAME.su2_invariant_projector();
    theta.minus(&theta.apply_fiber(proj.matrix(), 2))
}

/// Largest `‖g·α − α‖` over the binary tetrahedral group acting
/// multiplicatively on forms of any degree.
pub fn orbit_deviation(alpha: &MatrixForm) -> f64 {
    let p = alpha.degree();
    binary_tetrahedral_group()
        .iter()
        .map(|q| {
            let g = FIBER.multiplicative(&FRAME.unit_quaternion_matrix(q));
            alpha.apply_fiber(&g, p).minus(alpha).norm()
        })
        .fold(0.0, f64::max)
}

/// The structures `I, J, K` followed by [`RANDOM_STRUCTURES`] seeded random
/// induced structures.
pub fn sampled_structures() -> Vec<InducedStructure> {
    let mut rng = ChaCha8Rng::seed_from_u64(STRUCTURE_SEED);
    let mut out = vec![FRAME.structure_i(), FRAME.structure_j(), FRAME.structure_k()];
    out.extend((0..RANDOM_STRUCTURES).map(|_| FRAME.random_induced(&mut rng)));
    out
}

/// `Λ_L Θ`, an endomorphism-valued function.
pub fn contract(theta: &MatrixForm, l: &InducedStructure) -> MatrixForm {
    theta.apply_fiber(FRAME.contraction(l).matrix(), 0)
}

/// Curvature diagnostics: integrability for sampled induced structures,
/// `SU(2)`-invariance, Hodge contractions, degree and slope.
pub fn analyze(conn: &HermitianConnection) -> Result<CurvatureReport> {
    let theta = conn.curvature()?;
    let scale = theta.norm();
    let integrability: Vec<(String, [f64; 3], f64)> = sampled_structures()
        .iter()
        .map(|l| {
            let off = theta.type_part(l, 2, 0).plus(&theta.type_part(l, 0, 2)).norm();
            (l.label(), l.coeffs(), relative(off, scale))
        })
        .collect();
    let noninvariance = relative(noninvariant_part(&theta).norm(), scale);
    let ijk = [FRAME.structure_i(), FRAME.structure_j(), FRAME.structure_k()];
    let contraction_norms = ijk.clone().map(|l| relative(contract(&theta, &l).norm(), scale));
    let ds = degree_slope(conn, &ijk[0])?;
    let tol = VERDICT_TOLERANCE;
    Ok(CurvatureReport {
        curvature_norm: scale,
        noninvariance,
        contraction_norms,
        degree: ds.degree,
        slope: ds.slope,
        tolerance: tol,
        hyperholomorphic: noninvariance <= tol,
        yang_mills: integrability[0].2 <= tol && contraction_norms[0] <= tol,
        integrable_for_all_sampled: integrability.iter().all(|x| x.2 <= tol),
        integrability,
    })
}

/// Degree and slope of a bundle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DegreeSlope {
    /// `∫ c₁ ∧ ω_L` over the unit-volume torus.
    pub degree: f64,
    /// `degree / rank`.
    pub slope: f64,
}

/// The first Chern form `(√−1/2π) Tr Θ`.
pub fn first_chern_form(theta: &MatrixForm) -> MatrixForm {
    theta.trace().scale(C64::new(0.0, 1.0 / (2.0 * PI)))
}

/// `deg_L = ∫ c₁ ∧ ω_L` (complex dimension 2, unit volume), read off the
/// frequency-zero mode; `slope = deg / r`.
pub fn degree_slope(conn: &HermitianConnection, l: &InducedStructure) -> Result<DegreeSlope> {
    let c1 = first_chern_form(&conn.curvature()?);
    let omega = FRAME.kahler_form(l);
    let wedge = FIBER.wedge_operator(&omega);
    let top = c1.zero_mode().apply_fiber(&wedge, 4);
    let degree = top.matrix(&[0; 4], 0)[(0, 0)].re;
    Ok(DegreeSlope {
        degree,
        slope: degree / conn.rank() as f64,
    })
}

/// Chern-type forms of a connection.
#[derive(Debug, Clone)]
pub struct ChernForms {
    /// `(√−1/2π) Tr Θ`.
    pub c1_form: MatrixForm,
    /// `Tr(Θ∧Θ)`.
    pub tr_theta_wedge_theta: MatrixForm,
    /// The `Δ_d`-harmonic part of `Tr(Θ∧Θ)`.
    pub combination: MatrixForm,
    /// Largest deviation of the harmonic part under the isotropy group.
    pub invariance_residual: f64,
}

/// The first Chern form, `Tr(Θ∧Θ)` and its harmonic part with an
/// `SU(2)`-invariance residual.
pub fn chern_class_forms(conn: &HermitianConnection) -> Result<ChernForms> {
    let theta = conn.curvature()?;
    let tt = if conn.allows_truncation() { theta.wedge_truncated(&theta)? } else { theta.wedge(&theta)? };
    let tr = tt.trace();
    let scalar = HermitianConnection::zero(1, conn.cutoff(), BundleKind::Fundamental);
    let combination = Laplacian::new(LaplacianKind::D, &scalar, Domain::Degree(4))?.harmonic_part(&tr)?;
    Ok(ChernForms {
        c1_form: first_chern_form(&theta),
        invariance_residual: orbit_deviation(&combination),
        tr_theta_wedge_theta: tr,
        combination,
    })
}

/// Traceless curvature and projective hyperholomorphy.
#[derive(Debug, Clone)]
pub struct ProjectiveReport {
    /// `Θ_tl = Θ − (1/r) Tr(Θ) Id`.
    pub theta_traceless: MatrixForm,
    /// `‖Θ_tl − Π_inv Θ_tl‖`.
    pub projective_residual: f64,
    /// Non-invariant part of the curvature `α ↦ Θα − αΘ` of `End(B)`, as an
    /// `r² × r²`-matrix valued form.
    pub end_bundle_residual: f64,
}

/// `m ↦ (x ↦ mx − xm)` as an `r² × r²` matrix on row-major `r × r` matrices.
pub fn commutator_matrix(m: &CMat) -> CMat {
    let r = m.nrows();
    let mut out = CMat::zeros(r * r, r * r);
    for i in 0..r {
        for j in 0..r {
            for k in 0..r {
                // (mx)_{ij} = Σ_k m_ik x_kj ; (xm)_{ij} = Σ_k x_ik m_kj.
                out[(i * r + j, k * r + j)] += m[(i, k)];
                out[(i * r + j, i * r + k)] -= m[(k, j)];
            }
        }
    }
    out
}

/// Traceless curvature, its `SU(2)`-noninvariance and that of the induced
/// curvature of `End(B)`.
pub fn traceless_and_projective(conn: &HermitianConnection) -> Result<ProjectiveReport> {
    let theta = conn.curvature()?;
    let r = conn.rank();
    let mean = MatrixForm::scalar_times_matrix(&theta.trace(), &(CMat::identity(r, r) / C64::new(r as f64, 0.0)));
    let theta_tl = theta.minus(&mean);
    let end_curvature = theta.map_rank(r * r, commutator_matrix);
    Ok(ProjectiveReport {
        projective_residual: noninvariant_part(&theta_tl).norm(),
        end_bundle_residual: noninvariant_part(&end_curvature).norm(),
        theta_traceless: theta_tl,
    })
}

impl MatrixForm {
    /// Replaces every coefficient `m` by `f(m)`, an `r_new × r_new` matrix.
    pub fn map_rank(&self, r_new: usize, f: impl Fn(&CMat) -> CMat) -> MatrixForm {
        let mut out = MatrixForm::zero(r_new, self.degree(), self.cutoff());
        for k in self.frequencies() {
            for c in 0..self.ncomp() {
                out.add_matrix(*k, c, &f(&self.matrix(k, c)));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Pointwise Bogomolov–Gieseker functional on ℍ².

/// The frame of `ℍ² ≅ ℝ⁸`.
pub static FRAME8: LazyLock<QuaternionFrame> = LazyLock::new(|| QuaternionFrame::quaternionic(2));

struct BgOps {
    /// `Π^{1,1}_J` restricted to 2-forms.
    type11_j: CMat,
    /// `Π^{2,0}_I` restricted to 2-forms.
    type20_i: CMat,
    /// Kähler forms of `I, J, K` (2-form coefficients).
    kahler: [Vec<C64>; 3],
    /// `Λ_c²` from 4-forms to functions (a row vector).
    contraction_c_sq: CMat,
    /// The coframe `x_1, x_1′, x_2, x_2′` of `(1,0)`-forms for `I`.
    coframe: Vec<(Vec<C64>, Vec<C64>)>,
    /// `‖J̄x_i − x_i′‖` and `‖Σ x_i∧x_i′ − Ω‖`.
    coframe_residual: f64,
}

static BG_OPS: LazyLock<BgOps> = LazyLock::new(|| {
    let f = &*FRAME8;
    let alg = f.algebra();
    let (i, j, k) = (f.structure_i(), f.structure_j(), f.structure_k());
    let type11_j = alg.block(f.type_projector(&j, 1, 1).matrix(), 2, 2);
    let type20_i = alg.block(f.type_projector(&i, 2, 0).matrix(), 2, 2);
    let kahler = [i.clone(), j.clone(), k].map(|l| f.kahler_form(&l)[alg.degree_range(2)].to_vec());
    let lc = f.contraction_c();
    let contraction_c_sq = alg.block(&(lc.matrix() * lc.matrix()), 0, 4);
    // x_b = dz₁ of block b (dx − √−1 I dx for the first coordinate);
    // x_b′ = J̄ x_b = J(conj x_b).
    let mult_j = alg.multiplicative(f.j());
    let mut coframe = Vec::new();
    let mut residual: f64 = 0.0;
    let mut sum = vec![C64::new(0.0, 0.0); alg.size()];
    for b in 0..f.quaternionic_dim() {
        let mut x = vec![C64::new(0.0, 0.0); alg.size()];
        x[alg.index_of(&[4 * b])] = C64::new(1.0, 0.0);
        x[alg.index_of(&[4 * b + 1])] = C64::new(0.0, -1.0);
        let conj: Vec<C64> = x.iter().map(|z| z.conj()).collect();
        let xp: Vec<C64> = (&mult_j * nalgebra::DVector::from_vec(conj)).iter().copied().collect();
        let mut expected = vec![C64::new(0.0, 0.0); alg.size()];
        expected[alg.index_of(&[4 * b + 2])] = C64::new(1.0, 0.0);
        expected[alg.index_of(&[4 * b + 3])] = C64::new(0.0, -1.0);
        residual = residual.max(xp.iter().zip(&expected).map(|(a, e)| (a - e).norm()).fold(0.0, f64::max));
        for (s, w) in sum.iter_mut().zip(alg.wedge(&x, &xp)) {
            *s += w;
        }
        let r1 = alg.degree_range(1);
        coframe.push((x[r1.clone()].to_vec(), xp[r1].to_vec()));
    }
    let omega = f.holomorphic_symplectic_form();
    residual = residual.max(sum.iter().zip(&omega).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
    BgOps {
        type11_j,
        type20_i,
        kahler,
        contraction_c_sq,
        coframe,
        coframe_residual: residual,
    }
});

/// Verifies the coframe used by [`bg_functional`]: returns
/// `max(‖J̄x_i − x_i′‖, ‖Σ x_i∧x_i′ − Ω‖)`.
pub fn bg_coframe_residual() -> f64 {
    BG_OPS.coframe_residual
}

/// A pointwise 2-form on `ℝ⁸` with `r × r` matrix coefficients, indexed by
/// the degree-2 monomials of the fiber algebra in their standard order.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseTwoForm {
    /// Rank `r`.
    pub rank: usize,
    /// One coefficient per monomial `dx_a∧dx_b`, `a < b`.
    pub components: Vec<CMat>,
}

impl PointwiseTwoForm {
    /// The zero form.
    pub fn zero(rank: usize) -> Self {
        let n = FRAME8.algebra().degree_dim(2);
        PointwiseTwoForm {
            rank,
            components: vec![CMat::zeros(rank, rank); n],
        }
    }

    /// Independent standard complex Gaussian coefficients.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> Self {
        let mut out = Self::zero(rank);
        for m in &mut out.components {
            for z in m.iter_mut() {
                *z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            }
        }
        out
    }

    /// Frobenius norm `(Σ ‖m‖²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.components.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
    }

    /// `self − other`.
    pub fn minus(&self, other: &Self) -> Self {
        PointwiseTwoForm {
            rank: self.rank,
            components: self.components.iter().zip(&other.components).map(|(a, b)| a - b).collect(),
        }
    }

    /// Applies a `28 × 28` operator on 2-forms.
    pub fn apply(&self, op: &CMat) -> Self {
        let mut out = Self::zero(self.rank);
        for (a, dst) in out.components.iter_mut().enumerate() {
            for (b, m) in self.components.iter().enumerate() {
                let c = op[(a, b)];
                if c != C64::new(0.0, 0.0) {
                    *dst += m * c;
                }
            }
        }
        out
    }

    /// `⟨form, self⟩`-contraction with a scalar 2-form: `Σ_S conj(w_S) m_S`.
    pub fn pair(&self, w: &[C64]) -> CMat {
        let mut out = CMat::zeros(self.rank, self.rank);
        for (m, c) in self.components.iter().zip(w) {
            out += m * c.conj();
        }
        out
    }

    /// Skew-Hermitian part of every coefficient.
    pub fn skew_hermitian_part(&self) -> Self {
        PointwiseTwoForm {
            rank: self.rank,
            components: self.components.iter().map(|m| (m - m.adjoint()) * C64::new(0.5, 0.0)).collect(),
        }
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: C64) -> Self {
        PointwiseTwoForm {
            rank: self.rank,
            components: self.components.iter().map(|m| m * c).collect(),
        }
    }

    /// `self ∧ other`, a 4-form with coefficients indexed by the degree-4
    /// monomials.
    pub fn wedge(&self, other: &Self) -> Vec<CMat> {
        let alg = FRAME8.algebra();
        let r2 = alg.degree_range(2);
        let r4 = alg.degree_range(4);
        let mut out = vec![CMat::zeros(self.rank, self.rank); r4.len()];
        for (a, ma) in self.components.iter().enumerate() {
            let s = alg.mask(r2.start + a);
            for (b, mb) in other.components.iter().enumerate() {
                let t = alg.mask(r2.start + b);
                if s & t != 0 {
                    continue;
                }
                let idx = alg.index(s | t) - r4.start;
                out[idx] += ma * mb * C64::new(merge_sign(s, t), 0.0);
            }
        }
        out
    }
}

/// Configuration of [`bg_functional`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BgOptions {
    /// Largest accepted `‖projected − input‖ / ‖input‖`.
    pub max_projection_fraction: f64,
    /// Maximum number of alternating projection rounds.
    pub max_rounds: usize,
    /// Fixed-point tolerance of the alternating projection.
    pub fixed_point_tol: f64,
}

impl Default for BgOptions {
    fn default() -> Self {
        BgOptions {
            max_projection_fraction: 0.95,
            max_rounds: 50,
            fixed_point_tol: 1e-12,
        }
    }
}

/// Normalization between `Tr Λ_c²(Θ_{2,0}∧Θ_{2,0})` (with `Λ_c` the exact
/// adjoint of `Ω∧` for the flat metric, `|x_i|² = 2`) and the expansion
/// `Tr(Σ_{i≠j} −A_ij A_ji + Σ_{i≠j} A_ii A_jj)` in the coframe: each `Λ_c`
/// contributes `|x_i∧x_i′|² = 4` and the square of `Θ_{2,0}` counts every
/// pair twice.
pub const BG_EXPANSION_SCALE: f64 = 32.0;

/// One evaluation of the Bogomolov–Gieseker functional.
#[derive(Debug, Clone)]
pub struct BgSample {
    /// The constraint-projected curvature value `Θ` (skew-Hermitian).
    pub theta: PointwiseTwoForm,
    /// `‖projected − input‖ / ‖input‖`.
    pub projection_fraction: f64,
    /// Rounds of alternating projection used.
    pub projection_rounds: usize,
    /// `Θ_{2,0}` for `I` of the Hermitian curvature `√−1 Θ`.
    pub theta_20: PointwiseTwoForm,
    /// `‖Θ_{2,0}‖`.
    pub theta_20_norm: f64,
    /// `A_ij`, the coefficients of `x_i∧x_j′` in `Θ_{2,0}`.
    pub a: Vec<Vec<CMat>>,
    /// `(i, j, B_ij, C_ij)` for `i < j`, the coefficients of `x_i∧x_j` and
    /// `x_i′∧x_j′` in `Θ_{2,0}`.
    pub b_c: Vec<(usize, usize, CMat, CMat)>,
    /// `‖Θ_{2,0} − Σ A_ij x_i∧x_j′‖`: nonzero in general, since `J̄`-fixed
    /// `(2,0)`-forms also contain `x_i∧x_j + x_i′∧x_j′`-type terms.
    pub representation_residual: f64,
    /// Residual of the complete expansion including the `B, C` terms.
    pub full_representation_residual: f64,
    /// `max ‖C_ij − B_ij^†‖`, the `J̄`-reality of the `B, C` terms.
    pub cross_residual: f64,
    /// `max ‖A_ji − A_ij^†‖`.
    pub hermitian_residual: f64,
    /// `‖Σ A_ii‖`.
    pub trace_residual: f64,
    /// `Tr Λ_c²(Θ_{2,0}∧Θ_{2,0})`, real part.
    pub functional: f64,
    /// Imaginary part of the functional.
    pub functional_imaginary: f64,
    /// `BG_EXPANSION_SCALE · Tr(Σ_{i≠j} −A_ij A_ji + Σ_{i≠j} A_ii A_jj)`,
    /// the expansion in the `x_i∧x_j′` terms alone.
    pub expansion: f64,
    /// `expansion − BG_EXPANSION_SCALE · Σ_{i<j} Tr(B_ij C_ij + C_ij B_ij)`,
    /// the complete expansion; equals the functional.
    pub complete_expansion: f64,
    /// `‖Λ_c²(Θ∧Θ) − Λ_c²(Θ_{2,0}∧Θ_{2,0})‖` for the Hermitian curvature.
    pub full_square_residual: f64,
}

fn contract_c_sq(four: &[CMat]) -> CMat {
    let ops = &*BG_OPS;
    let r = four[0].nrows();
    let mut out = CMat::zeros(r, r);
    for (i, m) in four.iter().enumerate() {
        let c = ops.contraction_c_sq[(0, i)];
        if c != C64::new(0.0, 0.0) {
            out += m * c;
        }
    }
    out
}

/// Alternating orthogonal projection onto the constraint set: `(1,1)` for
/// `J`, `Λ_I Θ = Λ_J Θ = Λ_K Θ = 0`, skew-Hermitian coefficients.
pub fn project_constraints(theta: &PointwiseTwoForm, opts: &BgOptions) -> (PointwiseTwoForm, usize) {
    let ops = &*BG_OPS;
    let mut cur = theta.clone();
    for round in 1..=opts.max_rounds {
        let mut next = cur.apply(&ops.type11_j);
        for w in &ops.kahler {
            let norm_sq: f64 = w.iter().map(|z| z.norm_sqr()).sum();
            let coeff = next.pair(w) / C64::new(norm_sq, 0.0);
            for (m, c) in next.components.iter_mut().zip(w) {
                *m -= &coeff * *c;
            }
        }
        next = next.skew_hermitian_part();
        let moved = next.minus(&cur).norm();
        cur = next;
        if moved <= opts.fixed_point_tol * cur.norm().max(f64::MIN_POSITIVE) {
            return (cur, round);
        }
    }
    (cur, opts.max_rounds)
}

/// Projects a pointwise curvature value onto the constraint set and
/// evaluates `Tr Λ_c²(Θ_{2,0}∧Θ_{2,0})` for the Hermitian curvature `√−1 Θ`,
/// with the coframe expansion and its identities.
pub fn bg_functional(input: &PointwiseTwoForm, opts: &BgOptions) -> Result<BgSample> {
    let ops = &*BG_OPS;
    let (theta, rounds) = project_constraints(input, opts);
    let fraction = relative(theta.minus(input).norm(), input.norm());
    if fraction > opts.max_projection_fraction {
        return Err(HyperholError::ConstraintProjectionTooLarge {
            fraction,
            limit: opts.max_projection_fraction,
        });
    }
    let herm = theta.scale(C64::new(0.0, 1.0));
    let t20 = herm.apply(&ops.type20_i);
    let alg = FRAME8.algebra();
    let n = ops.coframe.len();
    // A_ij = ⟨Θ_{2,0}, x_i∧x_j′⟩ / |x_i∧x_j′|².
    let mut a = vec![vec![CMat::zeros(theta.rank, theta.rank); n]; n];
    let mut rebuilt = PointwiseTwoForm::zero(theta.rank);
    let r2 = alg.degree_range(2);
    let lift = |v: &[C64]| {
        let mut full = vec![C64::new(0.0, 0.0); alg.size()];
        full[alg.degree_range(1)].copy_from_slice(v);
        full
    };
    for i in 0..n {
        for j in 0..n {
            let w = alg.wedge(&lift(&ops.coframe[i].0), &lift(&ops.coframe[j].1))[r2.clone()].to_vec();
            let norm_sq: f64 = w.iter().map(|z| z.norm_sqr()).sum();
            a[i][j] = t20.pair(&w) / C64::new(norm_sq, 0.0);
            for (m, c) in rebuilt.components.iter_mut().zip(&w) {
                *m += &a[i][j] * *c;
            }
        }
    }
    let mut full_rebuilt = rebuilt.clone();
    let mut b_c = Vec::new();
    let mut cross_residual: f64 = 0.0;
    let mut cross = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut coeff = |x: &[C64], y: &[C64]| {
                let w = alg.wedge(&lift(x), &lift(y))[r2.clone()].to_vec();
                let norm_sq: f64 = w.iter().map(|z| z.norm_sqr()).sum();
                let m = t20.pair(&w) / C64::new(norm_sq, 0.0);
                for (dst, c) in full_rebuilt.components.iter_mut().zip(&w) {
                    *dst += &m * *c;
                }
                m
            };
            let b = coeff(&ops.coframe[i].0, &ops.coframe[j].0);
            let c = coeff(&ops.coframe[i].1, &ops.coframe[j].1);
            cross_residual = cross_residual.max((&c - b.adjoint()).norm());
            cross += (&b * &c + &c * &b).trace();
            b_c.push((i, j, b, c));
        }
    }
    let mut hermitian_residual: f64 = 0.0;
    let mut trace_sum = CMat::zeros(theta.rank, theta.rank);
    let mut expansion = C64::new(0.0, 0.0);
    for i in 0..n {
        trace_sum += &a[i][i];
        for j in 0..n {
            hermitian_residual = hermitian_residual.max((&a[j][i] - a[i][j].adjoint()).norm());
            if i != j {
                expansion += (-(&a[i][j] * &a[j][i]) + &a[i][i] * &a[j][j]).trace();
            }
        }
    }
    let value = contract_c_sq(&t20.wedge(&t20));
    let full = contract_c_sq(&herm.wedge(&herm));
    let functional = value.trace();
    Ok(BgSample {
        projection_fraction: fraction,
        projection_rounds: rounds,
        theta_20_norm: t20.norm(),
        representation_residual: t20.minus(&rebuilt).norm(),
        full_representation_residual: t20.minus(&full_rebuilt).norm(),
        cross_residual,
        complete_expansion: BG_EXPANSION_SCALE * (expansion - cross).re,
        hermitian_residual,
        trace_residual: trace_sum.norm(),
        functional: functional.re,
        functional_imaginary: functional.im,
        expansion: BG_EXPANSION_SCALE * expansion.re,
        full_square_residual: (full - value).norm(),
        theta,
        theta_20: t20,
        a,
        b_c,
    })
}

// ---------------------------------------------------------------------------
// Yang–Mills flow.

/// Configuration of [`yang_mills_flow`].
#[derive(Debug, Clone)]
pub struct FlowOptions {
    /// Maximum number of accepted steps.
    pub steps: usize,
    /// Initial step size.
    pub rate: f64,
    /// Structure `L` of the functional.
    pub structure: InducedStructure,
    /// Stop once the residual is at most this value.
    pub target_residual: f64,
    /// Halvings allowed per step before `StepSizeUnderflow`.
    pub max_halvings: usize,
    /// Factor applied to the step size after an accepted step (1 keeps it).
    pub growth: f64,
}

impl FlowOptions {
    /// Defaults for the structure `L`.
    pub fn new(steps: usize, rate: f64, structure: InducedStructure) -> Self {
        FlowOptions {
            steps,
            rate,
            structure,
            target_residual: 1e-9,
            max_halvings: 40,
            growth: 1.5,
        }
    }
}

/// A small perturbation of the trivial flat connection: seeded random
/// Hermitian potential of bandwidth 1 without its constant mode (constant
/// perturbations that commute are flat, and those that do not are only
/// quartically penalized by the flow functional).
pub fn flat_perturbation(
    bundle: BundleKind,
    rank: usize,
    cutoff: i32,
    amplitude: f64,
    seed: u64,
) -> Result<HermitianConnection> {
    let base = HermitianConnection::seeded_random(rank, cutoff, bundle, 1, amplitude, seed)?;
    let mut pot = base.potential().clone();
    pot.set_block([0; 4], vec![C64::new(0.0, 0.0); pot.block_len()]);
    Ok(HermitianConnection::new(bundle, pot)?.with_truncation(true))
}

/// One accepted step of the flow.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct FlowStep {
    /// Step number (0 is the initial state).
    pub step: usize,
    /// `(‖Λ_L Θ‖² + ‖Π^{0,2}_L Θ‖²)^{1/2}`.
    pub residual: f64,
    /// Step size used to reach this state.
    pub step_size: f64,
    /// Halvings needed to reach this state.
    pub halvings: usize,
}

/// A flow trajectory.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    /// Accepted states.
    pub history: Vec<FlowStep>,
    /// Final connection.
    pub connection: HermitianConnection,
    /// Whether truncation to the working cutoff was in effect.
    pub truncated: bool,
    /// Total number of step halvings.
    pub halvings: usize,
}

impl FlowTrajectory {
    /// The history as CSV with header `step,residual,step_size`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,residual,step_size\n");
        for h in &self.history {
            s.push_str(&format!("{},{:e},{:e}\n", h.step, h.residual, h.step_size));
        }
        s
    }

    /// Whether residuals never increase along the trajectory.
    pub fn is_monotone(&self) -> bool {
        self.history.windows(2).all(|w| w[1].residual <= w[0].residual)
    }
}

/// `‖Λ_L Θ‖² + ‖Π^{0,2}_L Θ‖²` and the form `L_L Λ_L Θ + Π^{0,2}_L Θ`
/// whose covariant adjoint derivative is half the gradient.
fn flow_energy(conn: &HermitianConnection, l: &InducedStructure) -> Result<(f64, MatrixForm)> {
    let theta = conn.curvature()?;
    let lam = contract(&theta, l);
    let t02 = theta.type_part(l, 0, 2);
    let energy = lam.norm().powi(2) + t02.norm().powi(2);
    let dual = lam.apply_fiber(FRAME.lefschetz(l).matrix(), 2).plus(&t02);
    Ok((energy, dual))
}

/// Gradient descent on `‖Λ_L Θ‖² + ‖Π^{0,2}_L Θ‖²` by explicit Euler steps,
/// halving the step until the functional decreases.  The gradient
/// `2 ∇*(L_L Λ_L Θ + Π^{0,2}_L Θ)` uses the adjoint action on `End(B)` and is
/// projected onto Hermitian potentials.
pub fn yang_mills_flow(conn0: &HermitianConnection, opts: &FlowOptions) -> Result<FlowTrajectory> {
    let l = &opts.structure;
    let mut conn = conn0.clone();
    let truncated = conn.allows_truncation();
    let (mut energy, mut dual) = flow_energy(&conn, l)?;
    let mut history = vec![FlowStep { step: 0, residual: energy.sqrt(), step_size: 0.0, halvings: 0 }];
    let mut rate = opts.rate;
    let mut total_halvings = 0;
    for step in 1..=opts.steps {
        if energy.sqrt() <= opts.target_residual {
            break;
        }
        let adjoint_conn = conn.clone().with_bundle(BundleKind::Endomorphism);
        let grad = Operator::new(OperatorKind::Nabla.adjoint(), &adjoint_conn).apply(&dual)?;
        let grad = real_part(&grad, RealStructureTag::Endomorphism).scale_re(2.0);
        let mut halvings = 0;
        loop {
            let candidate = HermitianConnection::new(conn.bundle(), conn.potential().axpy(C64::new(-rate, 0.0), &grad))?
                .with_truncation(truncated);
            let (e, d) = flow_energy(&candidate, l)?;
            if e < energy {
                conn = candidate;
                energy = e;
                dual = d;
                break;
            }
            halvings += 1;
            total_halvings += 1;
            rate *= 0.5;
            if halvings > opts.max_halvings {
                return Err(HyperholError::StepSizeUnderflow { step, rate });
            }
        }
        history.push(FlowStep { step, residual: energy.sqrt(), step_size: rate, halvings });
        if halvings == 0 {
            rate *= opts.growth;
        }
    }
    Ok(FlowTrajectory {
        history,
        connection: conn,
        truncated,
        halvings: total_halvings,
    })
}

