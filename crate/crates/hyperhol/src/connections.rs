//! Hermitian connections on trivial rank-`r` bundles over `T⁴`, their
//! curvature, and the first- and zero-order operators of quaternionic Hodge
//! theory.
//!
//! A first-order operator is written `Σ_μ E_μ ⊗ D_μ`, where `E_μ` is a
//! constant operator on the fiber `Λ*(ℝ⁴)⊗ℂ` (for `∇` it is `dx_μ∧·`, for
//! `∂_L` the `(1,0)` part of it, ...) and `D_μ = ∂_μ + A_μ·` is the covariant
//! partial derivative acting on the matrix coefficients.  Adjoints are the
//! exact adjoints `Σ_μ E_μ^† ⊗ D_μ^†` of the discretized operators.
//!
//! Bundle-valued forms are stored as [`MatrixForm`]s.  For the endomorphism
//! bundle `A` acts by commutator; for the fundamental bundle it acts by left
//! multiplication, so an `r × r` coefficient holds `r` independent sections.

use crate::error::{HyperholError, Result};
use crate::exterior::{CMat, C64};
use crate::quaternion_frame::InducedStructure;
use crate::spectral_fields::{
    check_holomorphic_type, freq_add, freq_norm, matmul_acc, random_form, real_part, type_projectors,
    Freq, MatrixForm, MatrixFormJson, RealStructureTag, FIBER, FRAME,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which bundle the forms take values in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BundleKind {
    /// `B` itself; the potential acts by left multiplication and the real
    /// structure is coefficient conjugation (requires a real potential).
    Fundamental,
    /// `End(B)`; the potential acts by commutator and the real structure is
    /// `α ↦ −α^†` tensored with form conjugation.
    Endomorphism,
}

impl BundleKind {
    /// The real structure used for `J̄` on forms with values in this bundle.
    pub fn real_structure(self) -> RealStructureTag {
        match self {
            BundleKind::Fundamental => RealStructureTag::Scalar,
            BundleKind::Endomorphism => RealStructureTag::Endomorphism,
        }
    }
}

/// A Hermitian connection `∇ = d + A` with `A` a skew-Hermitian-valued real
/// 1-form.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianConnection {
    bundle: BundleKind,
    potential: MatrixForm,
    allow_truncation: bool,
}

/// Tolerance for the Hermitian condition `T(A) = A`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// The operators of quaternionic Hodge theory.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorKind {
    /// `∇ = d + A`.
    Nabla,
    /// `∂` for an induced complex structure: the `(1,0)` part of `∇`.
    Partial(InducedStructure),
    /// `∂̄`: the `(0,1)` part of `∇`.
    Dbar(InducedStructure),
    /// `∂^j = J̄∘∂∘J̄⁻¹` on `(p,0)`-forms for `I`.
    PartialJ,
    /// `δ = (∂ + √−1∂^j)/2` on `(p,0)`-forms.
    Delta,
    /// `δ̄ = (∂ − √−1∂^j)/2` on `(p,0)`-forms.
    DeltaBar,
    /// `d^c = L⁻¹∘∇∘L` with `L` acting multiplicatively on forms.
    DC(InducedStructure),
    /// `L_L = ω_L∧·`.
    Lefschetz(InducedStructure),
    /// `Λ_L`, the pointwise adjoint of `L_L`.
    Contraction(InducedStructure),
    /// `L_c = Ω∧·` with `Ω = ω_J − √−1ω_K`.
    LefschetzC,
    /// `Λ_c = Λ_J + √−1Λ_K`.
    ContractionC,
    /// The exact adjoint of the wrapped operator.
    Adjoint(Box<OperatorKind>),
}

impl OperatorKind {
    /// The adjoint operator kind (simplified: `L ↔ Λ`, `X** = X`).
    pub fn adjoint(&self) -> OperatorKind {
        match self {
            OperatorKind::Adjoint(inner) => (**inner).clone(),
            OperatorKind::Lefschetz(l) => OperatorKind::Contraction(l.clone()),
            OperatorKind::Contraction(l) => OperatorKind::Lefschetz(l.clone()),
            OperatorKind::LefschetzC => OperatorKind::ContractionC,
            OperatorKind::ContractionC => OperatorKind::LefschetzC,
            other => OperatorKind::Adjoint(Box::new(other.clone())),
        }
    }

    /// Human-readable label.
    pub fn label(&self) -> String {
        match self {
            OperatorKind::Nabla => "∇".into(),
            OperatorKind::Partial(l) => format!("∂_{}", l.label()),
            OperatorKind::Dbar(l) => format!("∂̄_{}", l.label()),
            OperatorKind::PartialJ => "∂^j".into(),
            OperatorKind::Delta => "δ".into(),
            OperatorKind::DeltaBar => "δ̄".into(),
            OperatorKind::DC(l) => format!("d^c_{}", l.label()),
            OperatorKind::Lefschetz(l) => format!("L_{}", l.label()),
            OperatorKind::Contraction(l) => format!("Λ_{}", l.label()),
            OperatorKind::LefschetzC => "L_c".into(),
            OperatorKind::ContractionC => "Λ_c".into(),
            OperatorKind::Adjoint(inner) => format!("({})*", inner.label()),
        }
    }

    /// Change of form degree caused by the operator.
    pub fn degree_shift(&self) -> i32 {
        match self {
            OperatorKind::Lefschetz(_) | OperatorKind::LefschetzC => 2,
            OperatorKind::Contraction(_) | OperatorKind::ContractionC => -2,
            OperatorKind::Adjoint(inner) => -inner.degree_shift(),
            _ => 1,
        }
    }

    /// True for the operators defined only on `(p,0)`-forms for `I`.
    pub fn requires_holomorphic_type(&self) -> bool {
        match self {
            OperatorKind::PartialJ | OperatorKind::Delta | OperatorKind::DeltaBar => true,
            OperatorKind::Adjoint(inner) => inner.requires_holomorphic_type(),
            _ => false,
        }
    }
}

/// A constant fiber operator paired with each partial derivative.
type FiberFamily = [CMat; 4];

fn nabla_family() -> FiberFamily {
    std::array::from_fn(|mu| FIBER.eps_basis(mu))
}

fn typed_family(l: &InducedStructure, holomorphic: bool) -> FiberFamily {
    let projs = type_projectors(l);
    std::array::from_fn(|mu| {
        let eps = FIBER.eps_basis(mu);
        let mut out = CMat::zeros(16, 16);
        for p in 0..=3usize {
            for q in 0..=(3 - p) {
                let target = if holomorphic { (p + 1) * 5 + q } else { p * 5 + q + 1 };
                out += &projs[target] * &eps * &projs[p * 5 + q];
            }
        }
        out
    })
}

fn dc_family(l: &InducedStructure) -> FiberFamily {
    let m = FRAME.multiplicative(l).matrix().clone();
    let m_inv = m.clone().try_inverse().expect("multiplicative action is invertible");
    std::array::from_fn(|mu| &m_inv * FIBER.eps_basis(mu) * &m)
}

/// A compiled operator: fiber matrices prepared once for repeated use.
#[derive(Debug, Clone)]
pub struct Operator {
    kind: OperatorKind,
    conn: HermitianConnection,
    plan: Plan,
}

#[derive(Debug, Clone)]
enum Plan {
    FirstOrder { family: FiberFamily, adjoint: bool },
    ZeroOrder { matrix: CMat, shift: i32 },
    /// `J̄∘X∘J̄⁻¹` of a first-order plan.
    Conjugated(Box<Plan>),
    /// `Σ c_i X_i` of plans with the same degree shift.
    Combination(Vec<(C64, Plan)>),
}

fn plan_for(kind: &OperatorKind, adjoint: bool) -> Plan {
    let i = FRAME.structure_i();
    let half = C64::new(0.5, 0.0);
    let ihalf = C64::new(0.0, 0.5);
    match kind {
        OperatorKind::Nabla => Plan::FirstOrder { family: nabla_family(), adjoint },
        OperatorKind::Partial(l) => Plan::FirstOrder { family: typed_family(l, true), adjoint },
        OperatorKind::Dbar(l) => Plan::FirstOrder { family: typed_family(l, false), adjoint },
        OperatorKind::DC(l) => Plan::FirstOrder { family: dc_family(l), adjoint },
        OperatorKind::PartialJ => Plan::Conjugated(Box::new(Plan::FirstOrder {
            family: typed_family(&i, true),
            adjoint,
        })),
        OperatorKind::Delta | OperatorKind::DeltaBar => {
            let sign = if *kind == OperatorKind::Delta { 1.0 } else { -1.0 };
            // (∂ ± i∂^j)/2, adjoint (∂* ∓ i(∂^j)*)/2.
            let c = if adjoint { ihalf * (-sign) } else { ihalf * sign };
            Plan::Combination(vec![
                (half, plan_for(&OperatorKind::Partial(i.clone()), adjoint)),
                (c, plan_for(&OperatorKind::PartialJ, adjoint)),
            ])
        }
        OperatorKind::Lefschetz(l) => {
            let m = FRAME.lefschetz(l).matrix().clone();
            zero_order(m, 2, adjoint)
        }
        OperatorKind::Contraction(l) => {
            let m = FRAME.lefschetz(l).matrix().clone();
            zero_order(m, 2, !adjoint)
        }
        OperatorKind::LefschetzC => zero_order(FRAME.lefschetz_c().matrix().clone(), 2, adjoint),
        OperatorKind::ContractionC => zero_order(FRAME.lefschetz_c().matrix().clone(), 2, !adjoint),
        OperatorKind::Adjoint(inner) => plan_for(inner, !adjoint),
    }
}

fn zero_order(m: CMat, shift: i32, adjoint: bool) -> Plan {
    if adjoint {
        Plan::ZeroOrder { matrix: m.adjoint(), shift: -shift }
    } else {
        Plan::ZeroOrder { matrix: m, shift }
    }
}

fn target_degree(p: usize, shift: i32) -> Result<usize> {
    let out = p as i32 + shift;
    if !(0..=4).contains(&out) {
        return Err(HyperholError::ShapeMismatch(format!(
            "operator of degree shift {shift} applied to a {p}-form"
        )));
    }
    Ok(out as usize)
}

impl Operator {
    /// Prepares `kind` for repeated application with `conn`.
    pub fn new(kind: OperatorKind, conn: &HermitianConnection) -> Self {
        let plan = plan_for(&kind, false);
        Operator {
            kind,
            conn: conn.clone(),
            plan,
        }
    }

    /// The operator kind.
    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    /// Applies the operator.
    pub fn apply(&self, alpha: &MatrixForm) -> Result<MatrixForm> {
        self.conn.check_compatible(alpha)?;
        if self.kind.requires_holomorphic_type() {
            check_holomorphic_type(alpha)?;
            // The image is of type (p±1, 0) exactly; projecting removes the
            // round-off that would otherwise fail the next domain check.
            let out = self.run(&self.plan, alpha, false)?;
            let p = out.degree();
            return Ok(out.type_part(&FRAME.structure_i(), p, 0));
        }
        self.run(&self.plan, alpha, false)
    }

    /// Applies the operator without the `(p,0)` domain check, using the
    /// unchecked `J̄` on forms of mixed type.  Used to evaluate commutators
    /// such as `[L_J, δ*]` whose intermediate forms leave `Λ^{p,0}`.
    pub fn apply_lenient(&self, alpha: &MatrixForm) -> Result<MatrixForm> {
        self.conn.check_compatible(alpha)?;
        self.run(&self.plan, alpha, true)
    }

    fn run(&self, plan: &Plan, alpha: &MatrixForm, lenient: bool) -> Result<MatrixForm> {
        match plan {
            Plan::FirstOrder { family, adjoint } => {
                let p_out = target_degree(alpha.degree(), if *adjoint { -1 } else { 1 })?;
                let mut out = MatrixForm::zero(alpha.rank(), p_out, alpha.cutoff());
                for (mu, e) in family.iter().enumerate() {
                    let derived = self.conn.covariant_partial(mu, alpha, *adjoint)?;
                    let fiber = if *adjoint { e.adjoint() } else { e.clone() };
                    out = out.plus(&derived.apply_fiber(&fiber, p_out));
                }
                Ok(out)
            }
            Plan::ZeroOrder { matrix, shift } => {
                let p_out = target_degree(alpha.degree(), *shift)?;
                Ok(alpha.apply_fiber(matrix, p_out))
            }
            Plan::Conjugated(inner) => {
                let tag = self.conn.bundle.real_structure();
                if lenient {
                    let sign = if alpha.degree() % 2 == 1 { -1.0 } else { 1.0 };
                    let pre = alpha.bar_j_unchecked(tag).scale_re(sign);
                    let mid = self.run(inner, &pre, true)?;
                    return Ok(mid.bar_j_unchecked(tag));
                }
                let pre = alpha.bar_j_inverse(tag)?;
                let mid = self.run(inner, &pre, false)?;
                Ok(mid.bar_j_unchecked(tag))
            }
            Plan::Combination(terms) => {
                let mut acc: Option<MatrixForm> = None;
                for (c, p) in terms {
                    let v = self.run(p, alpha, lenient)?.scale(*c);
                    acc = Some(match acc {
                        None => v,
                        Some(a) => a.plus(&v),
                    });
                }
                Ok(acc.expect("nonempty combination"))
            }
        }
    }
}

/// Applies `kind` for the connection `conn` to `alpha`.
pub fn apply(kind: &OperatorKind, conn: &HermitianConnection, alpha: &MatrixForm) -> Result<MatrixForm> {
    Operator::new(kind.clone(), conn).apply(alpha)
}

/// Relative `(2,0)+(0,2)` part of the curvature for `L`: zero exactly when
/// the connection is integrable with respect to `L`.
pub fn newlander_test(conn: &HermitianConnection, l: &InducedStructure) -> Result<f64> {
    let theta = conn.curvature()?;
    Ok(non_integrable_fraction(&theta, l))
}

/// `‖(Π^{2,0}_L + Π^{0,2}_L)Θ‖ / max(‖Θ‖, ε)` for a 2-form `Θ`.
pub fn non_integrable_fraction(theta: &MatrixForm, l: &InducedStructure) -> f64 {
    let off = theta.type_part(l, 2, 0).plus(&theta.type_part(l, 0, 2)).norm();
    off / theta.norm().max(f64::MIN_POSITIVE)
}

impl HermitianConnection {
    /// Wraps a potential, checking `T(A) = A` for the endomorphism real
    /// structure (skew-Hermitian real 1-form).
    pub fn new(bundle: BundleKind, potential: MatrixForm) -> Result<Self> {
        if potential.degree() != 1 {
            return Err(HyperholError::ShapeMismatch(format!(
                "connection potential must be a 1-form, got degree {}",
                potential.degree()
            )));
        }
        let dev = potential.minus(&potential.real_t(RealStructureTag::Endomorphism)).norm();
        if dev > HERMITIAN_TOL * potential.norm().max(1.0) {
            return Err(HyperholError::HypothesisViolated {
                check: "Hermitian potential (T(A) = A)".into(),
                residual: dev,
            });
        }
        Ok(HermitianConnection {
            bundle,
            potential,
            allow_truncation: false,
        })
    }

    /// The trivial connection `d` on a rank-`r` bundle.
    pub fn zero(rank: usize, cutoff: i32, bundle: BundleKind) -> Self {
        HermitianConnection {
            bundle,
            potential: MatrixForm::zero(rank, 1, cutoff),
            allow_truncation: false,
        }
    }

    /// A flat connection with holonomy: `A = Σ_μ θ_μ X dx_μ` for a fixed
    /// skew-Hermitian generator `X` (`√−1` for rank one, the real rotation
    /// generator `[[0,−1],[1,0]]` on the first two coordinates otherwise).
    pub fn constant_commuting(rank: usize, cutoff: i32, bundle: BundleKind, theta: [f64; 4]) -> Self {
        let x = twist_generator(rank);
        let mut a = MatrixForm::zero(rank, 1, cutoff);
        for (mu, t) in theta.iter().enumerate() {
            a.add_matrix([0; 4], mu, &(&x * C64::new(*t, 0.0)));
        }
        HermitianConnection::new(bundle, a).expect("skew-Hermitian constant potential")
    }

    /// The constant potential `A = X dx₁ + Y dx₂` for skew-Hermitian `X, Y`.
    pub fn constant_noncommuting(bundle: BundleKind, cutoff: i32, x: &CMat, y: &CMat) -> Result<Self> {
        let r = x.nrows();
        let mut a = MatrixForm::zero(r, 1, cutoff);
        a.add_matrix([0; 4], 0, x);
        a.add_matrix([0; 4], 1, y);
        HermitianConnection::new(bundle, a)
    }

    /// A seeded random Hermitian connection with Gaussian coefficients on all
    /// frequencies with `‖k‖_∞ ≤ bandwidth`, scaled by `amplitude`.
    pub fn seeded_random(
        rank: usize,
        cutoff: i32,
        bundle: BundleKind,
        bandwidth: i32,
        amplitude: f64,
        seed: u64,
    ) -> Result<Self> {
        if bandwidth > cutoff {
            return Err(HyperholError::BandwidthOverflow { needed: bandwidth, cutoff });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = random_form(&mut rng, rank, 1, cutoff, bandwidth, None, amplitude);
        HermitianConnection::new(bundle, real_part(&raw, RealStructureTag::Endomorphism))
    }

    /// Enables or disables explicit truncation of products beyond the cutoff.
    pub fn with_truncation(mut self, allow: bool) -> Self {
        self.allow_truncation = allow;
        self
    }

    /// Same connection acting on the other bundle.
    pub fn with_bundle(mut self, bundle: BundleKind) -> Self {
        self.bundle = bundle;
        self
    }

    /// Whether products may be truncated at the cutoff.
    pub fn allows_truncation(&self) -> bool {
        self.allow_truncation
    }

    /// The bundle the operators act on.
    pub fn bundle(&self) -> BundleKind {
        self.bundle
    }

    /// Rank `r`.
    pub fn rank(&self) -> usize {
        self.potential.rank()
    }

    /// Working cutoff.
    pub fn cutoff(&self) -> i32 {
        self.potential.cutoff()
    }

    /// The potential `A`.
    pub fn potential(&self) -> &MatrixForm {
        &self.potential
    }

    /// `∇ + a` for a Hermitian 1-form `a`.
    pub fn shifted(&self, a: &MatrixForm) -> Result<Self> {
        let mut out = HermitianConnection::new(self.bundle, self.potential.plus(a))?;
        out.allow_truncation = self.allow_truncation;
        Ok(out)
    }

    fn check_compatible(&self, alpha: &MatrixForm) -> Result<()> {
        if alpha.rank() != self.rank() || alpha.cutoff() != self.cutoff() {
            return Err(HyperholError::ShapeMismatch(format!(
                "form (rank {}, cutoff {}) vs connection (rank {}, cutoff {})",
                alpha.rank(),
                alpha.cutoff(),
                self.rank(),
                self.cutoff()
            )));
        }
        Ok(())
    }

    /// Curvature `Θ = dA + A∧A`.
    pub fn curvature(&self) -> Result<MatrixForm> {
        let a = &self.potential;
        let aa = if self.allow_truncation { a.wedge_truncated(a)? } else { a.wedge(a)? };
        Ok(a.d()?.plus(&aa))
    }

    /// Bianchi residual `‖dΘ + A∧Θ − Θ∧A‖`.
    pub fn bianchi_residual(&self) -> Result<f64> {
        let theta = self.curvature()?;
        let a = &self.potential;
        let r = theta.d()?.plus(&a.wedge(&theta)?).minus(&theta.wedge(a)?);
        Ok(r.norm())
    }

    /// `D_μ α` (or its exact adjoint) acting on the coefficients of `α`:
    /// `(D_μα)_k = √−1 k_μ α_k + Σ_{k₁} A_{μ,k₁} ⋆ α_{k−k₁}`, where `⋆` is left
    /// multiplication or the commutator.
    pub fn covariant_partial(&self, mu: usize, alpha: &MatrixForm, adjoint: bool) -> Result<MatrixForm> {
        let r = alpha.rank();
        let r2 = r * r;
        let n = alpha.ncomp();
        let cutoff = alpha.cutoff();
        let sign = if adjoint { -1.0 } else { 1.0 };
        let mut out = MatrixForm::zero(r, alpha.degree(), cutoff);
        for (k, b) in alpha.iter() {
            if k[mu] == 0 {
                continue;
            }
            let c = C64::new(0.0, sign * k[mu] as f64);
            out.set_block(*k, b.iter().map(|z| z * c).collect());
        }
        let one = C64::new(1.0, 0.0);
        for (k1, ablock) in self.potential.iter() {
            let amat = &ablock[mu * r2..(mu + 1) * r2];
            if amat.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            let amat: Vec<C64> = if adjoint {
                // (A_{k₁})^† couples β_{k+k₁} into frequency k.
                let mut t = vec![C64::new(0.0, 0.0); r2];
                for i in 0..r {
                    for j in 0..r {
                        t[i * r + j] = amat[j * r + i].conj();
                    }
                }
                t
            } else {
                amat.to_vec()
            };
            let shift: Freq = if adjoint { k1.map(|x| -x) } else { *k1 };
            for (k2, b) in alpha.iter() {
                let k = freq_add(&shift, k2);
                if freq_norm(&k) > cutoff {
                    if self.allow_truncation {
                        continue;
                    }
                    return Err(HyperholError::BandwidthOverflow {
                        needed: freq_norm(&k),
                        cutoff,
                    });
                }
                let dst = out.block_mut(k);
                for comp in 0..n {
                    let src = &b[comp * r2..(comp + 1) * r2];
                    let d = &mut dst[comp * r2..(comp + 1) * r2];
                    matmul_acc(d, &amat, src, r, one);
                    if self.bundle == BundleKind::Endomorphism {
                        matmul_acc(d, src, &amat, r, -one);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Serializes to `{rank, cutoff, bundle, potential}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ConnectionJson {
            rank: self.rank(),
            cutoff: self.cutoff(),
            bundle: self.bundle,
            potential: MatrixFormJson::from(&self.potential),
        })
        .expect("serializable")
    }

    /// Parses the JSON produced by [`HermitianConnection::to_json`].
    pub fn from_json(s: &str) -> Result<Self> {
        let j: ConnectionJson =
            serde_json::from_str(s).map_err(|e| HyperholError::Serialization(e.to_string()))?;
        let potential = MatrixForm::try_from(j.potential)?;
        if potential.rank() != j.rank || potential.cutoff() != j.cutoff {
            return Err(HyperholError::Serialization(
                "potential rank/cutoff disagree with the connection header".into(),
            ));
        }
        HermitianConnection::new(j.bundle, potential)
    }
}

/// JSON layout of a connection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectionJson {
    /// Rank `r`.
    pub rank: usize,
    /// Working cutoff.
    pub cutoff: i32,
    /// Bundle the connection acts on.
    pub bundle: BundleKind,
    /// Potential 1-form.
    pub potential: MatrixFormJson,
}

/// The skew-Hermitian generator used by [`HermitianConnection::constant_commuting`].
pub fn twist_generator(rank: usize) -> CMat {
    let mut x = CMat::zeros(rank, rank);
    if rank == 1 {
        x[(0, 0)] = C64::new(0.0, 1.0);
    } else {
        x[(0, 1)] = C64::new(-1.0, 0.0);
        x[(1, 0)] = C64::new(1.0, 0.0);
    }
    x
}
