//! Laplacians, harmonic spaces, Green operators and the identity suites of
//! quaternionic Hodge theory, together with the constructive `∂∂^j`-lemma,
//! the `sl(2)` and `SU(2)` actions on cohomology and the `(p,q)`-table.
//!
//! For connections with constant potential every operator preserves the
//! frequency, and the Laplacians are diagonalized exactly block by block.
//! Otherwise the Laplacian is materialized on the whole band-limited space
//! (within a budget) or inverted by conjugate gradients.

use crate::connections::{newlander_test, BundleKind, HermitianConnection, Operator, OperatorKind};
use crate::error::{HyperholError, Result};
use crate::exterior::{CMat, C64};
use crate::quaternion_frame::{conjugate_structure, InducedStructure};
use crate::spectral_fields::{
    frequencies_within, random_form, type_projectors, Freq, MatrixForm, RealStructureTag, FIBER, FRAME,
};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Eigenvalues below this fraction of the spectral scale count as kernel.
pub const HARMONIC_THRESHOLD: f64 = 1e-8;
/// Largest dimension materialized as a dense matrix.
pub const DENSE_BUDGET: usize = 5000;
/// Relative tolerance of the conjugate-gradient Green solver.
pub const CG_TOLERANCE: f64 = 1e-12;
/// Pass threshold of the identity suites.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
/// Tolerance of the integrability hypotheses.
pub const HYPOTHESIS_TOLERANCE: f64 = 1e-10;

/// The Laplacians `Δ_X = XX* + X*X`.
#[derive(Debug, Clone, PartialEq)]
pub enum LaplacianKind {
    /// `Δ_∂` for an induced complex structure.
    Partial(InducedStructure),
    /// `Δ_∂̄`.
    Dbar(InducedStructure),
    /// `Δ_d = Δ_∇`.
    D,
    /// `Δ_{d^c}`.
    DC(InducedStructure),
    /// `Δ_{∂^j}` on `(p,0)`-forms.
    PartialJ,
    /// `Δ_δ` on `(p,0)`-forms.
    Delta,
    /// `Δ_δ̄` on `(p,0)`-forms.
    DeltaBar,
}

impl LaplacianKind {
    /// The first-order operator `X`.
    pub fn first_order(&self) -> OperatorKind {
        match self {
            LaplacianKind::Partial(l) => OperatorKind::Partial(l.clone()),
            LaplacianKind::Dbar(l) => OperatorKind::Dbar(l.clone()),
            LaplacianKind::D => OperatorKind::Nabla,
            LaplacianKind::DC(l) => OperatorKind::DC(l.clone()),
            LaplacianKind::PartialJ => OperatorKind::PartialJ,
            LaplacianKind::Delta => OperatorKind::Delta,
            LaplacianKind::DeltaBar => OperatorKind::DeltaBar,
        }
    }

    /// Label such as `Δ_∂_I`.
    pub fn label(&self) -> String {
        format!("Δ_{}", self.first_order().label())
    }
}

/// The space of forms a Laplacian acts on.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// All forms of the given degree.
    Degree(usize),
    /// Forms of type `(p, q)` for an induced structure.
    Type {
        /// The complex structure.
        structure: InducedStructure,
        /// Holomorphic degree.
        p: usize,
        /// Antiholomorphic degree.
        q: usize,
    },
}

impl Domain {
    /// `(p,0)`-forms for `I`.
    pub fn holomorphic(p: usize) -> Self {
        Domain::Type { structure: FRAME.structure_i(), p, q: 0 }
    }

    /// Form degree.
    pub fn degree(&self) -> usize {
        match self {
            Domain::Degree(p) => *p,
            Domain::Type { p, q, .. } => p + q,
        }
    }

    /// Orthonormal basis of the fiber part of the domain (vectors of length
    /// `C(4, degree)`).
    pub fn fiber_basis(&self) -> Vec<Vec<C64>> {
        let deg = self.degree();
        let n = FIBER.degree_dim(deg);
        match self {
            Domain::Degree(_) => (0..n)
                .map(|i| (0..n).map(|j| C64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect())
                .collect(),
            Domain::Type { structure, p, q } => {
                let proj = FIBER.block(&type_projectors(structure)[p * 5 + q], deg, deg);
                let h = (&proj + proj.adjoint()) * C64::new(0.5, 0.0);
                let eig = h.symmetric_eigen();
                (0..n)
                    .filter(|&i| eig.eigenvalues[i] > 0.5)
                    .map(|i| eig.eigenvectors.column(i).iter().copied().collect())
                    .collect()
            }
        }
    }

    fn label(&self) -> String {
        match self {
            Domain::Degree(p) => format!("degree {p}"),
            Domain::Type { structure, p, q } => format!("type ({p},{q}) for {}", structure.label()),
        }
    }
}

/// Eigen-decomposition of a Laplacian restricted to one frequency.
#[derive(Debug, Clone)]
struct FrequencyBlock {
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
}

/// A Laplacian on a fixed domain, with cached spectral data.
#[derive(Debug)]
pub struct Laplacian {
    kind: LaplacianKind,
    conn: HermitianConnection,
    domain: Domain,
    forward: Operator,
    adjoint: Operator,
    fiber_basis: Vec<Vec<C64>>,
    blocks: Mutex<HashMap<Freq, Arc<FrequencyBlock>>>,
    scale: OnceLock<f64>,
    dense: OnceLock<std::result::Result<Arc<DenseSpectrum>, HyperholError>>,
}

#[derive(Debug)]
struct DenseSpectrum {
    freqs: Vec<Freq>,
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
}

/// An orthonormal basis of the numerical kernel of a Laplacian.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    /// Label of the Laplacian.
    pub laplacian: String,
    /// Label of the domain.
    pub domain: String,
    /// Orthonormal harmonic forms.
    pub forms: Vec<MatrixForm>,
    /// Absolute kernel threshold used.
    pub threshold: f64,
    /// Spectral scale the threshold was derived from.
    pub scale: f64,
}

impl HarmonicBasis {
    /// Dimension of the harmonic space.
    pub fn dim(&self) -> usize {
        self.forms.len()
    }

    /// Orthogonal projection onto the span of the basis.
    pub fn project(&self, alpha: &MatrixForm) -> MatrixForm {
        let mut out = alpha.scale_re(0.0);
        for h in &self.forms {
            let c = alpha.l2_inner(h).expect("matching shapes");
            out = out.axpy(c, h);
        }
        out
    }

    /// Coefficients `⟨α, h_i⟩`.
    pub fn coefficients(&self, alpha: &MatrixForm) -> Vec<C64> {
        self.forms.iter().map(|h| alpha.l2_inner(h).expect("matching shapes")).collect()
    }

    /// `‖Gram − Id‖_max`.
    pub fn gram_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, fa) in self.forms.iter().enumerate() {
            for (b, fb) in self.forms.iter().enumerate() {
                let g = fa.l2_inner(fb).expect("matching shapes");
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

fn is_constant(conn: &HermitianConnection) -> bool {
    conn.potential().frequencies().all(|k| *k == [0, 0, 0, 0])
}

fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(m.nrows(), m.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

impl Laplacian {
    /// The Laplacian `kind` of `conn` on `domain`.  The quaternionic
    /// Laplacians require a `(p,0)` domain for `I`.
    pub fn new(kind: LaplacianKind, conn: &HermitianConnection, domain: Domain) -> Result<Self> {
        let needs_holomorphic = matches!(
            kind,
            LaplacianKind::PartialJ | LaplacianKind::Delta | LaplacianKind::DeltaBar
        );
        if needs_holomorphic {
            let ok = matches!(&domain, Domain::Type { structure, q: 0, .. } if *structure == FRAME.structure_i());
            if !ok {
                return Err(HyperholError::WrongType(format!(
                    "{} is only defined on (p,0)-forms for I, not on {}",
                    kind.label(),
                    domain.label()
                )));
            }
        }
        let first = kind.first_order();
        Ok(Laplacian {
            forward: Operator::new(first.clone(), conn),
            adjoint: Operator::new(first.adjoint(), conn),
            fiber_basis: domain.fiber_basis(),
            kind,
            conn: conn.clone(),
            domain,
            blocks: Mutex::new(HashMap::new()),
            scale: OnceLock::new(),
            dense: OnceLock::new(),
        })
    }

    /// The Laplacian kind.
    pub fn kind(&self) -> &LaplacianKind {
        &self.kind
    }

    /// The domain.
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// The connection.
    pub fn connection(&self) -> &HermitianConnection {
        &self.conn
    }

    /// Label such as `Δ_∂_I on type (1,0) for I`.
    pub fn label(&self) -> String {
        format!("{} on {}", self.kind.label(), self.domain.label())
    }

    /// `Δα = XX*α + X*Xα` (terms leaving degrees `0…4` vanish).
    pub fn apply(&self, alpha: &MatrixForm) -> Result<MatrixForm> {
        let p = alpha.degree();
        let mut out = alpha.scale_re(0.0);
        if p >= 1 {
            out = out.plus(&self.forward.apply(&self.adjoint.apply(alpha)?)?);
        }
        if p <= 3 {
            out = out.plus(&self.adjoint.apply(&self.forward.apply(alpha)?)?);
        }
        Ok(out)
    }

    fn local_dim(&self) -> usize {
        let r = self.conn.rank();
        self.fiber_basis.len() * r * r
    }

    /// The domain basis vector `(f, i, j)` at frequency `k`.
    fn basis_form(&self, k: Freq, idx: usize) -> MatrixForm {
        let r = self.conn.rank();
        let r2 = r * r;
        let (f, e) = (idx / r2, idx % r2);
        let deg = self.domain.degree();
        let mut out = MatrixForm::zero(r, deg, self.conn.cutoff());
        let block = out.block_mut(k);
        for (c, z) in self.fiber_basis[f].iter().enumerate() {
            block[c * r2 + e] = *z;
        }
        out
    }

    /// Domain coordinates of a coefficient block.
    fn coordinates(&self, block: &[C64]) -> DVector<C64> {
        let r2 = self.conn.rank() * self.conn.rank();
        let mut out = DVector::zeros(self.local_dim());
        for (f, v) in self.fiber_basis.iter().enumerate() {
            for e in 0..r2 {
                let mut acc = C64::new(0.0, 0.0);
                for (c, z) in v.iter().enumerate() {
                    acc += z.conj() * block[c * r2 + e];
                }
                out[f * r2 + e] = acc;
            }
        }
        out
    }

    fn block_from_coordinates(&self, coords: &[C64]) -> Vec<C64> {
        let r2 = self.conn.rank() * self.conn.rank();
        let n = FIBER.degree_dim(self.domain.degree());
        let mut out = vec![C64::new(0.0, 0.0); n * r2];
        for (f, v) in self.fiber_basis.iter().enumerate() {
            for e in 0..r2 {
                let x = coords[f * r2 + e];
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                for (c, z) in v.iter().enumerate() {
                    out[c * r2 + e] += z * x;
                }
            }
        }
        out
    }

    fn frequency_block(&self, k: Freq) -> Result<Arc<FrequencyBlock>> {
        if let Some(b) = self.blocks.lock().expect("block cache").get(&k) {
            return Ok(b.clone());
        }
        let n = self.local_dim();
        let mut m = CMat::zeros(n, n);
        let zero = vec![C64::new(0.0, 0.0); FIBER.degree_dim(self.domain.degree()) * self.conn.rank().pow(2)];
        for col in 0..n {
            let image = self.apply(&self.basis_form(k, col))?;
            let block = image.block(&k).unwrap_or(&zero);
            m.set_column(col, &self.coordinates(block));
        }
        let (eigenvalues, eigenvectors) = hermitian_eigen(&m);
        let b = Arc::new(FrequencyBlock { eigenvalues, eigenvectors });
        self.blocks.lock().expect("block cache").insert(k, b.clone());
        Ok(b)
    }

    fn dense_spectrum(&self) -> Result<Arc<DenseSpectrum>> {
        self.dense
            .get_or_init(|| {
                let freqs = frequencies_within(self.conn.cutoff());
                let local = self.local_dim();
                let dim = freqs.len() * local;
                if dim > DENSE_BUDGET {
                    return Err(HyperholError::SolverBudgetExceeded { dimension: dim, budget: DENSE_BUDGET });
                }
                let mut m = CMat::zeros(dim, dim);
                for (fi, k) in freqs.iter().enumerate() {
                    for l in 0..local {
                        let image = self.apply(&self.basis_form(*k, l))?;
                        let col = fi * local + l;
                        for (fo, ko) in freqs.iter().enumerate() {
                            if let Some(b) = image.block(ko) {
                                let c = self.coordinates(b);
                                for (row, z) in c.iter().enumerate() {
                                    m[(fo * local + row, col)] = *z;
                                }
                            }
                        }
                    }
                }
                let (eigenvalues, eigenvectors) = hermitian_eigen(&m);
                Ok(Arc::new(DenseSpectrum { freqs, eigenvalues, eigenvectors }))
            })
            .clone()
    }

    /// Spectral scale: the largest eigenvalue at the corner frequency
    /// `(N, N, N, N)` (constant potential) or of the materialized operator.
    pub fn spectral_scale(&self) -> Result<f64> {
        if let Some(s) = self.scale.get() {
            return Ok(*s);
        }
        let s = if is_constant(&self.conn) {
            let n = self.conn.cutoff();
            let b = self.frequency_block([n, n, n, n])?;
            b.eigenvalues.last().copied().unwrap_or(1.0).max(1.0)
        } else {
            self.dense_spectrum()?.eigenvalues.last().copied().unwrap_or(1.0).max(1.0)
        };
        Ok(*self.scale.get_or_init(|| s))
    }

    /// Absolute kernel threshold.
    pub fn threshold(&self) -> Result<f64> {
        Ok(HARMONIC_THRESHOLD * self.spectral_scale()?)
    }

    /// Orthonormal basis of the numerical kernel.
    pub fn harmonic_basis(&self) -> Result<HarmonicBasis> {
        let thr = self.threshold()?;
        let mut forms = Vec::new();
        if is_constant(&self.conn) {
            for k in frequencies_within(self.conn.cutoff()) {
                let b = self.frequency_block(k)?;
                for (i, lam) in b.eigenvalues.iter().enumerate() {
                    if *lam <= thr {
                        let v: Vec<C64> = b.eigenvectors.column(i).iter().copied().collect();
                        let mut f = MatrixForm::zero(self.conn.rank(), self.domain.degree(), self.conn.cutoff());
                        f.set_block(k, self.block_from_coordinates(&v));
                        forms.push(f);
                    }
                }
            }
        } else {
            let d = self.dense_spectrum()?;
            let local = self.local_dim();
            for (i, lam) in d.eigenvalues.iter().enumerate() {
                if *lam <= thr {
                    let v = d.eigenvectors.column(i);
                    let mut f = MatrixForm::zero(self.conn.rank(), self.domain.degree(), self.conn.cutoff());
                    for (fi, k) in d.freqs.iter().enumerate() {
                        let coords: Vec<C64> = (0..local).map(|l| v[fi * local + l]).collect();
                        if coords.iter().any(|z| z.norm() > 0.0) {
                            f.set_block(*k, self.block_from_coordinates(&coords));
                        }
                    }
                    forms.push(f.pruned());
                }
            }
        }
        Ok(HarmonicBasis {
            laplacian: self.kind.label(),
            domain: self.domain.label(),
            forms,
            threshold: thr,
            scale: self.spectral_scale()?,
        })
    }

    fn check_in_domain(&self, tau: &MatrixForm) -> Result<()> {
        if tau.degree() != self.domain.degree() {
            return Err(HyperholError::ShapeMismatch(format!(
                "{}-form outside the domain {}",
                tau.degree(),
                self.domain.label()
            )));
        }
        if let Domain::Type { structure, p, q } = &self.domain {
            let off = tau.minus(&tau.type_part(structure, *p, *q)).norm();
            if off > 1e-10 * tau.norm().max(f64::MIN_POSITIVE) {
                return Err(HyperholError::WrongType(format!(
                    "form has a component of relative size {:e} outside {}",
                    off / tau.norm(),
                    self.domain.label()
                )));
            }
        }
        Ok(())
    }

    /// Green operator: `Gτ ⊥ ker Δ` with `ΔGτ = τ − Π_harm τ`.
    pub fn green(&self, tau: &MatrixForm) -> Result<MatrixForm> {
        Ok(self.green_and_harmonic(tau)?.0)
    }

    /// Harmonic projection `Π_harm τ`.
    pub fn harmonic_part(&self, tau: &MatrixForm) -> Result<MatrixForm> {
        Ok(self.green_and_harmonic(tau)?.1)
    }

    /// `(Gτ, Π_harm τ)`.
    pub fn green_and_harmonic(&self, tau: &MatrixForm) -> Result<(MatrixForm, MatrixForm)> {
        self.check_in_domain(tau)?;
        let thr = self.threshold()?;
        let mut g = tau.scale_re(0.0);
        let mut h = tau.scale_re(0.0);
        if is_constant(&self.conn) {
            for (k, block) in tau.iter() {
                let b = self.frequency_block(*k)?;
                let c = self.coordinates(block);
                let w = b.eigenvectors.adjoint() * &c;
                let mut gc = DVector::<C64>::zeros(c.len());
                let mut hc = DVector::<C64>::zeros(c.len());
                for (i, lam) in b.eigenvalues.iter().enumerate() {
                    let col = b.eigenvectors.column(i);
                    if *lam <= thr {
                        hc += col * w[i];
                    } else {
                        gc += col * (w[i] / *lam);
                    }
                }
                g.set_block(*k, self.block_from_coordinates(gc.as_slice()));
                h.set_block(*k, self.block_from_coordinates(hc.as_slice()));
            }
            return Ok((g, h));
        }
        match self.dense_spectrum() {
            Ok(d) => {
                let local = self.local_dim();
                let mut c = DVector::<C64>::zeros(d.freqs.len() * local);
                for (fi, k) in d.freqs.iter().enumerate() {
                    if let Some(b) = tau.block(k) {
                        let x = self.coordinates(b);
                        for l in 0..local {
                            c[fi * local + l] = x[l];
                        }
                    }
                }
                let w = d.eigenvectors.adjoint() * &c;
                let mut gc = DVector::<C64>::zeros(c.len());
                let mut hc = DVector::<C64>::zeros(c.len());
                for (i, lam) in d.eigenvalues.iter().enumerate() {
                    let col = d.eigenvectors.column(i);
                    if *lam <= thr {
                        hc += col * w[i];
                    } else {
                        gc += col * (w[i] / *lam);
                    }
                }
                for (fi, k) in d.freqs.iter().enumerate() {
                    let gs: Vec<C64> = (0..local).map(|l| gc[fi * local + l]).collect();
                    let hs: Vec<C64> = (0..local).map(|l| hc[fi * local + l]).collect();
                    g.set_block(*k, self.block_from_coordinates(&gs));
                    h.set_block(*k, self.block_from_coordinates(&hs));
                }
                Ok((g.pruned(), h.pruned()))
            }
            Err(HyperholError::SolverBudgetExceeded { .. }) => {
                let g = self.conjugate_gradient(tau)?;
                let h = tau.minus(&self.apply(&g)?);
                Ok((g, h))
            }
            Err(e) => Err(e),
        }
    }

    /// Conjugate gradients for `Δx = τ`, started at zero so that the
    /// iterates stay orthogonal to the kernel.
    pub fn conjugate_gradient(&self, tau: &MatrixForm) -> Result<MatrixForm> {
        let dim = frequencies_within(self.conn.cutoff()).len() * self.local_dim();
        let cap = 10 * dim;
        let b_norm = tau.norm();
        let mut x = tau.scale_re(0.0);
        if b_norm == 0.0 {
            return Ok(x);
        }
        let mut r = tau.clone();
        let mut p = r.clone();
        let mut rs = r.norm().powi(2);
        for it in 0..cap {
            let ap = self.apply(&p)?;
            let pap = p.l2_inner(&ap)?.re;
            if pap <= 0.0 {
                return Err(HyperholError::SolverDiverged { iterations: it, residual: rs.sqrt() / b_norm });
            }
            let alpha = rs / pap;
            x = x.axpy(C64::new(alpha, 0.0), &p);
            r = r.axpy(C64::new(-alpha, 0.0), &ap);
            let rs_new = r.norm().powi(2);
            if rs_new.sqrt() <= CG_TOLERANCE * b_norm {
                return Ok(x);
            }
            p = r.axpy(C64::new(rs_new / rs, 0.0), &p);
            rs = rs_new;
        }
        Err(HyperholError::SolverDiverged { iterations: cap, residual: rs.sqrt() / b_norm })
    }
}

/// `Δ_∂` for `I` on `(p,0)`-forms of the degree of `τ`.
pub fn holomorphic_laplacian(conn: &HermitianConnection, p: usize) -> Result<Laplacian> {
    Laplacian::new(LaplacianKind::Partial(FRAME.structure_i()), conn, Domain::holomorphic(p))
}

/// `Γτ = ∂*Gτ` for a `(p,0)`-form `τ`; a left inverse of `∂` on exact forms.
pub fn gamma(conn: &HermitianConnection, tau: &MatrixForm) -> Result<MatrixForm> {
    let lap = holomorphic_laplacian(conn, tau.degree())?;
    gamma_with(&lap, tau)
}

/// `Γτ` using a prepared Laplacian.
pub fn gamma_with(lap: &Laplacian, tau: &MatrixForm) -> Result<MatrixForm> {
    let g = lap.green(tau)?;
    let op = Operator::new(OperatorKind::Partial(FRAME.structure_i()).adjoint(), lap.connection());
    op.apply(&g)
}

/// Relative residual `‖a − b‖ / max(‖a‖, ‖b‖, ‖α‖)`.
pub fn relative_residual(a: &MatrixForm, b: &MatrixForm, input: &MatrixForm) -> f64 {
    let scale = a.norm().max(b.norm()).max(input.norm()).max(f64::MIN_POSITIVE);
    a.minus(b).norm() / scale
}

/// One line of an identity-suite report.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IdentityCheck {
    /// Check name from the catalog.
    pub name: String,
    /// Largest relative residual over the samples.
    pub residual: f64,
    /// Number of sampled forms.
    pub samples: usize,
    /// Pass threshold.
    pub tolerance: f64,
    /// Description of the hypothesis and its status.
    pub hypothesis: String,
}

impl IdentityCheck {
    /// `residual ≤ tolerance`.
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Which identity groups to run.
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Induced structures for the Kähler identities and the twistor
    /// conjugation check.
    pub structures: Vec<InducedStructure>,
    /// Sampled forms per identity.
    pub samples: usize,
    /// Seed of the form sampler.
    pub seed: u64,
    /// Run the Kähler group (sum, difference, `d^c`, Kodaira).
    pub kahler: bool,
    /// Run the quaternionic group (Laplacian equalities, anticommutations,
    /// Lefschetz commutators).
    pub quaternionic: bool,
    /// Run the twistor conjugation check.
    pub twistor: bool,
}

impl SuiteOptions {
    /// `I`, `J`, `K` plus `extra` seeded random structures, all groups.
    pub fn standard(samples: usize, seed: u64, extra: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut structures = vec![FRAME.structure_i(), FRAME.structure_j(), FRAME.structure_k()];
        for _ in 0..extra {
            structures.push(FRAME.random_induced(&mut rng));
        }
        SuiteOptions { structures, samples, seed, kahler: true, quaternionic: true, twistor: true }
    }
}

/// Bandwidth of test forms for which every Laplacian stays band-safe.
pub fn band_safe_bandwidth(conn: &HermitianConnection) -> Result<i32> {
    let b = conn.cutoff() - 2 * conn.potential().bandwidth();
    if b < 0 {
        return Err(HyperholError::BandwidthOverflow {
            needed: 2 * conn.potential().bandwidth(),
            cutoff: conn.cutoff(),
        });
    }
    Ok(b)
}

/// The operator `α ↦ Θ∧α` of the curvature acting on bundle-valued forms
/// (commutator for the endomorphism bundle).
pub fn curvature_action(conn: &HermitianConnection, theta: &MatrixForm, alpha: &MatrixForm) -> Result<MatrixForm> {
    let left = theta.wedge(alpha)?;
    Ok(match conn.bundle() {
        BundleKind::Fundamental => left,
        BundleKind::Endomorphism => left.minus(&alpha.wedge(theta)?),
    })
}

/// Applies `op` when the target degree exists, otherwise returns zero of
/// the given degree.
fn apply_or_zero(op: &Operator, alpha: &MatrixForm, shift: i32) -> Result<Option<MatrixForm>> {
    let target = alpha.degree() as i32 + shift;
    if !(0..=4).contains(&target) {
        return Ok(None);
    }
    Ok(Some(op.apply_lenient(alpha)?))
}

fn sum_opt(a: Option<MatrixForm>, b: Option<MatrixForm>, sign: f64) -> Option<MatrixForm> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.axpy(C64::new(sign, 0.0), &y)),
        (Some(x), None) => Some(x),
        (None, Some(y)) => Some(y.scale_re(sign)),
        (None, None) => None,
    }
}

struct Recorder {
    checks: Vec<IdentityCheck>,
}

impl Recorder {
    fn record(&mut self, name: &str, residual: f64, samples: usize, hypothesis: &str) {
        if let Some(c) = self.checks.iter_mut().find(|c| c.name == name) {
            c.residual = c.residual.max(residual);
            c.samples += samples;
        } else {
            self.checks.push(IdentityCheck {
                name: name.into(),
                residual,
                samples,
                tolerance: IDENTITY_TOLERANCE,
                hypothesis: hypothesis.into(),
            });
        }
    }
}

/// Runs the operator identity suites on seeded band-safe random forms.
///
/// Errors with `HypothesisViolated` when a requested group's hypothesis
/// fails: integrability for every listed structure (Kähler group) or
/// hyperholomorphy (quaternionic and twistor groups).
pub fn identity_suite(conn: &HermitianConnection, opts: &SuiteOptions) -> Result<Vec<IdentityCheck>> {
    for l in &opts.structures {
        let res = newlander_test(conn, l)?;
        if opts.kahler && res > HYPOTHESIS_TOLERANCE {
            return Err(HyperholError::HypothesisViolated {
                check: format!("integrability for {}", l.label()),
                residual: res,
            });
        }
    }
    if opts.quaternionic || opts.twistor {
        for l in [FRAME.structure_i(), FRAME.structure_j(), FRAME.structure_k()] {
            let res = newlander_test(conn, &l)?;
            if res > HYPOTHESIS_TOLERANCE {
                return Err(HyperholError::HypothesisViolated {
                    check: format!("hyperholomorphy (integrability for {})", l.label()),
                    residual: res,
                });
            }
        }
    }
    let bw = band_safe_bandwidth(conn)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let r = conn.rank();
    let n = conn.cutoff();
    let theta = conn.curvature()?;
    let mut rec = Recorder { checks: Vec::new() };
    let sample = |rng: &mut ChaCha8Rng, p: usize| random_form(rng, r, p, n, bw, Some(6), 1.0);

    if opts.kahler {
        let nabla = Operator::new(OperatorKind::Nabla, conn);
        let nabla_s = Operator::new(OperatorKind::Nabla.adjoint(), conn);
        for l in &opts.structures {
            let hyp = format!("integrable for {}", l.label());
            let d = Operator::new(OperatorKind::Partial(l.clone()), conn);
            let ds = Operator::new(OperatorKind::Partial(l.clone()).adjoint(), conn);
            let db = Operator::new(OperatorKind::Dbar(l.clone()), conn);
            let dbs = Operator::new(OperatorKind::Dbar(l.clone()).adjoint(), conn);
            let dc = Operator::new(OperatorKind::DC(l.clone()), conn);
            let dcs = Operator::new(OperatorKind::DC(l.clone()).adjoint(), conn);
            let lam = Operator::new(OperatorKind::Contraction(l.clone()), conn);
            let lap = |x: &Operator, xs: &Operator, a: &MatrixForm| -> Result<MatrixForm> {
                let one = apply_or_zero(xs, a, -1)?.map(|v| x.apply_lenient(&v)).transpose()?;
                let two = apply_or_zero(x, a, 1)?.map(|v| xs.apply_lenient(&v)).transpose()?;
                Ok(sum_opt(one, two, 1.0).unwrap_or_else(|| a.scale_re(0.0)))
            };
            for s in 0..opts.samples {
                let p = s % 5;
                let a = sample(&mut rng, p);
                let ld = lap(&d, &ds, &a)?;
                let ldb = lap(&db, &dbs, &a)?;
                let lfull = lap(&nabla, &nabla_s, &a)?;
                let ldc = lap(&dc, &dcs, &a)?;
                rec.record("laplacian-sum-equals-full", relative_residual(&ld.plus(&ldb), &lfull, &a), 1, &hyp);
                // Δ_∂ − Δ_∂̄ = −√−1[Λ, Θ∧·].
                let lam_a = apply_or_zero(&lam, &a, -2)?;
                let t1 = if p + 2 <= 4 {
                    Some(lam.apply_lenient(&curvature_action(conn, &theta, &a)?)?)
                } else {
                    None
                };
                let t2 = match lam_a {
                    Some(v) => Some(curvature_action(conn, &theta, &v)?),
                    None => None,
                };
                let comm = sum_opt(t1, t2, -1.0).unwrap_or_else(|| a.scale_re(0.0));
                rec.record(
                    "laplacian-difference-curvature",
                    relative_residual(&ld.minus(&ldb), &comm.scale(C64::new(0.0, -1.0)), &a),
                    1,
                    &hyp,
                );
                rec.record("twisted-differential-laplacian", relative_residual(&lfull, &ldc, &a), 1, &hyp);
                // Kodaira identities on degrees where both sides exist.
                if p >= 1 {
                    let k1 = sum_opt(
                        apply_or_zero(&d, &a, 1)?.map(|v| lam.apply_lenient(&v)).transpose()?,
                        apply_or_zero(&lam, &a, -2)?.map(|v| d.apply_lenient(&v)).transpose()?,
                        -1.0,
                    );
                    let lhs = k1.unwrap_or_else(|| MatrixForm::zero(r, p - 1, n));
                    let rhs = dbs.apply_lenient(&a)?.scale(C64::new(0.0, -1.0));
                    rec.record("kodaira-contraction-partial", relative_residual(&lhs, &rhs, &a), 1, "any Hermitian connection");
                    let k2 = sum_opt(
                        apply_or_zero(&db, &a, 1)?.map(|v| lam.apply_lenient(&v)).transpose()?,
                        apply_or_zero(&lam, &a, -2)?.map(|v| db.apply_lenient(&v)).transpose()?,
                        -1.0,
                    );
                    let lhs = k2.unwrap_or_else(|| MatrixForm::zero(r, p - 1, n));
                    let rhs = ds.apply_lenient(&a)?.scale(C64::new(0.0, 1.0));
                    rec.record("kodaira-contraction-dbar", relative_residual(&lhs, &rhs, &a), 1, "any Hermitian connection");
                }
            }
        }
    }

    if opts.quaternionic {
        let hyp = "hyperholomorphic";
        let i = FRAME.structure_i();
        let j = FRAME.structure_j();
        let d = Operator::new(OperatorKind::Partial(i.clone()), conn);
        let ds = Operator::new(OperatorKind::Partial(i.clone()).adjoint(), conn);
        let dj = Operator::new(OperatorKind::PartialJ, conn);
        let djs = Operator::new(OperatorKind::PartialJ.adjoint(), conn);
        let de = Operator::new(OperatorKind::Delta, conn);
        let des = Operator::new(OperatorKind::Delta.adjoint(), conn);
        let db = Operator::new(OperatorKind::DeltaBar, conn);
        let dbs = Operator::new(OperatorKind::DeltaBar.adjoint(), conn);
        let lj = Operator::new(OperatorKind::Lefschetz(j), conn);
        let lap = |x: &Operator, xs: &Operator, a: &MatrixForm| -> Result<MatrixForm> {
            let p = a.degree();
            let mut out = a.scale_re(0.0);
            if p >= 1 {
                out = out.plus(&x.apply(&xs.apply(a)?)?);
            }
            if p <= 1 {
                out = out.plus(&xs.apply(&x.apply(a)?)?);
            }
            Ok(out)
        };
        for s in 0..opts.samples {
            let p = s % 3;
            let a = sample(&mut rng, p).type_part(&i, p, 0);
            let l_d = lap(&d, &ds, &a)?;
            let l_dj = lap(&dj, &djs, &a)?;
            let l_de = lap(&de, &des, &a)?.scale_re(2.0);
            let l_db = lap(&db, &dbs, &a)?.scale_re(2.0);
            let res = relative_residual(&l_dj, &l_d, &a)
                .max(relative_residual(&l_de, &l_d, &a))
                .max(relative_residual(&l_db, &l_d, &a));
            rec.record("thm-4.1-laplacians", res, 1, hyp);
            if p <= 1 {
                let dja = dj.apply(&a)?;
                let sq = if p == 0 { dj.apply(&dja)?.norm() / a.norm().max(dja.norm()) } else { 0.0 };
                rec.record("partial-j-squares-to-zero", sq, 1, hyp);
                let anti = if p == 0 {
                    relative_residual(&dj.apply(&d.apply(&a)?)?, &d.apply(&dja)?.scale_re(-1.0), &a)
                } else {
                    0.0
                };
                rec.record("partial-j-anticommutes-with-partial", anti, 1, hyp);
                // [L_J, ∂*] = ∂^j.
                let lhs = lefschetz_commutator(&lj, &ds, &a)?;
                rec.record("lefschetz-j-commutator-partial-star", relative_residual(&lhs, &dja, &a), 1, hyp);
                // [L_J, δ*] = √−1 δ̄ and [L_J, δ̄*] = −√−1 δ.
                let lhs = lefschetz_commutator(&lj, &des, &a)?;
                let rhs = db.apply(&a)?.scale(C64::new(0.0, 1.0));
                rec.record("lefschetz-j-commutator-delta-star", relative_residual(&lhs, &rhs, &a), 1, hyp);
                let lhs = lefschetz_commutator(&lj, &dbs, &a)?;
                let rhs = de.apply(&a)?.scale(C64::new(0.0, -1.0));
                rec.record("lefschetz-j-commutator-delta-bar-star", relative_residual(&lhs, &rhs, &a), 1, hyp);
            }
            // Anticommutations of adjoint pairs (degrees where both exist).
            let pairs: [(&Operator, &Operator, &str); 4] = [
                (&ds, &dj, "partial-star-anticommutes-with-partial-j"),
                (&djs, &d, "partial-j-star-anticommutes-with-partial"),
                (&des, &db, "delta-star-anticommutes-with-delta-bar"),
                (&dbs, &de, "delta-bar-star-anticommutes-with-delta"),
            ];
            if p == 1 {
                for (x, y, name) in pairs {
                    let v = x.apply(&y.apply(&a)?)?.plus(&y.apply(&x.apply(&a)?)?);
                    rec.record(name, v.norm() / a.norm(), 1, hyp);
                }
            }
            if p == 0 {
                let firsts: [(&Operator, &Operator, &str); 4] = [
                    (&d, &de, "partial-anticommutes-with-delta"),
                    (&d, &db, "partial-anticommutes-with-delta-bar"),
                    (&de, &db, "delta-anticommutes-with-delta-bar"),
                    (&dj, &de, "partial-j-anticommutes-with-delta"),
                ];
                for (x, y, name) in firsts {
                    let v = x.apply(&y.apply(&a)?)?.plus(&y.apply(&x.apply(&a)?)?);
                    rec.record(name, v.norm() / a.norm(), 1, hyp);
                }
            }
        }
    }

    if opts.twistor {
        let i = FRAME.structure_i();
        let lap_i = Laplacian::new(LaplacianKind::Partial(i.clone()), conn, Domain::Degree(0))?;
        for l in &opts.structures {
            let target = conjugate_structure(&FRAME, &l.quaternion(), &i);
            let lap_t = Laplacian::new(LaplacianKind::Partial(target), conn, Domain::Degree(0))?;
            let m = FRAME.multiplicative(l).matrix().clone();
            let m_inv = m.clone().try_inverse().expect("invertible");
            for s in 0..opts.samples {
                let p = s % 5;
                let a = sample(&mut rng, p);
                let lhs = lap_i.apply(&a.apply_fiber(&m_inv, p))?.apply_fiber(&m, p);
                let rhs = lap_t.apply(&a)?;
                rec.record("twistor-conjugated-laplacian", relative_residual(&lhs, &rhs, &a), 1, "hyperholomorphic");
            }
        }
    }
    Ok(rec.checks)
}

/// `[L_J, X*]α = L_J X*α − X* L_J α` for a `(p,0)`-form `α` (lenient: the
/// intermediate forms leave `Λ^{p,0}`).
fn lefschetz_commutator(lj: &Operator, xs: &Operator, a: &MatrixForm) -> Result<MatrixForm> {
    let p = a.degree();
    let first = if p >= 1 { Some(lj.apply_lenient(&xs.apply_lenient(a)?)?) } else { None };
    let second = if p + 2 <= 4 { Some(xs.apply_lenient(&lj.apply_lenient(a)?)?) } else { None };
    Ok(sum_opt(first, second, -1.0).unwrap_or_else(|| MatrixForm::zero(a.rank(), p + 1, a.cutoff())))
}

/// Holds the sign of the `∂∂^j`-lemma solution operator once determined.
static DDJ_SIGN: OnceLock<f64> = OnceLock::new();

fn ddj_candidate(conn: &HermitianConnection, omega: &MatrixForm) -> Result<MatrixForm> {
    let p = omega.degree();
    let i = FRAME.structure_i();
    let g_p = holomorphic_laplacian(conn, p)?;
    let g_pm1 = holomorphic_laplacian(conn, p - 1)?;
    let ds = Operator::new(OperatorKind::Partial(i).adjoint(), conn);
    let djs = Operator::new(OperatorKind::PartialJ.adjoint(), conn);
    let x = ds.apply(&g_p.green(omega)?)?;
    djs.apply(&g_pm1.green(&x)?)
}

fn ddj_apply(conn: &HermitianConnection, kappa: &MatrixForm) -> Result<MatrixForm> {
    let d = Operator::new(OperatorKind::Partial(FRAME.structure_i()), conn);
    let dj = Operator::new(OperatorKind::PartialJ, conn);
    d.apply(&dj.apply(kappa)?)
}

/// Sign `s` such that `κ = s·(∂^j)*G∂*Gω` solves `∂∂^jκ = ω`, determined
/// once on a manufactured solution over the trivial line bundle.
pub fn ddj_sign() -> f64 {
    *DDJ_SIGN.get_or_init(|| {
        let conn = HermitianConnection::zero(1, 2, BundleKind::Fundamental);
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let sigma = random_form(&mut rng, 1, 0, 2, 2, Some(6), 1.0);
        let omega = ddj_apply(&conn, &sigma).expect("band-safe manufactured input");
        let cand = ddj_candidate(&conn, &omega).expect("solvable");
        let res = |s: f64| ddj_apply(&conn, &cand.scale_re(s)).expect("band-safe").minus(&omega).norm();
        if res(1.0) <= res(-1.0) { 1.0 } else { -1.0 }
    })
}

/// Tolerance of the closedness and exactness preconditions of [`ddj_solve`].
pub const DDJ_PRECONDITION_TOL: f64 = 1e-9;

/// Solves `∂∂^jκ = ω` for a `∂`- and `∂^j`-closed, `∂`-exact `(p,0)`-form
/// `ω` (`p ≥ 2`).
pub fn ddj_solve(conn: &HermitianConnection, omega: &MatrixForm) -> Result<MatrixForm> {
    let p = omega.degree();
    if p < 2 {
        return Err(HyperholError::WrongType(format!(
            "a ∂∂^j-exact form has degree at least 2, got {p}"
        )));
    }
    let norm = omega.norm();
    if norm == 0.0 {
        return Ok(MatrixForm::zero(omega.rank(), p - 2, omega.cutoff()));
    }
    crate::spectral_fields::check_holomorphic_type(omega)?;
    if p < 4 {
        let d = Operator::new(OperatorKind::Partial(FRAME.structure_i()), conn);
        let dj = Operator::new(OperatorKind::PartialJ, conn);
        let closed = d.apply(omega)?.norm().max(if p < 2 { 0.0 } else { dj.apply(omega)?.norm() });
        if closed > DDJ_PRECONDITION_TOL * norm {
            return Err(HyperholError::NotClosed { residual: closed / norm });
        }
    }
    let lap = holomorphic_laplacian(conn, p)?;
    let harm = lap.harmonic_part(omega)?.norm();
    if harm > DDJ_PRECONDITION_TOL * norm {
        return Err(HyperholError::NotExact { residual: harm / norm });
    }
    Ok(ddj_candidate(conn, omega)?.scale_re(ddj_sign()))
}

/// Residual `‖∂∂^jκ − ω‖ / ‖ω‖`.
pub fn ddj_residual(conn: &HermitianConnection, kappa: &MatrixForm, omega: &MatrixForm) -> Result<f64> {
    Ok(ddj_apply(conn, kappa)?.minus(omega).norm() / omega.norm().max(f64::MIN_POSITIVE))
}

/// Harmonic bases of `Δ_∂` on `(i,0)`-forms, `i = 0, 1, 2`.
pub fn holomorphic_harmonic_bases(conn: &HermitianConnection) -> Result<Vec<HarmonicBasis>> {
    (0..=2).map(|p| holomorphic_laplacian(conn, p)?.harmonic_basis()).collect()
}

/// Matrices of `L_c`, `Λ_c` and `H = ½[Λ_c, L_c]` on harmonic `(i,0)`-forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sl2Action {
    /// `dim H^i`, `i = 0, 1, 2`.
    pub dims: Vec<usize>,
    /// Eigenvalues of `H` on each `H^i` (real parts, sorted).
    pub h_eigenvalues: Vec<Vec<f64>>,
    /// `‖H − (n − 2i)‖` on each `H^i` with `n = 2`.
    pub h_residuals: Vec<f64>,
    /// Largest component of `L_c h` or `Λ_c h` outside the harmonic space,
    /// relative to `‖h‖`.
    pub harmonicity_residual: f64,
    /// Smallest singular value of `L_c : H⁰ → H²`.
    pub lc_min_singular_value: f64,
    /// `‖Λ_c‖` on `H⁰` (zero: there is no degree −2).
    pub contraction_on_h0: f64,
}

/// The `sl(2)` action on harmonic `(i,0)`-forms.
pub fn sl2_action(bases: &[HarmonicBasis]) -> Result<Sl2Action> {
    if bases.len() != 3 {
        return Err(HyperholError::ShapeMismatch("need harmonic bases for degrees 0, 1, 2".into()));
    }
    let lc = FRAME.lefschetz_c().matrix().clone();
    let lam = lc.adjoint();
    let dims: Vec<usize> = bases.iter().map(|b| b.dim()).collect();
    let mut harm_res: f64 = 0.0;
    // Matrices of L_c: H^i → H^{i+2} and Λ_c: H^{i+2} → H^i for i = 0.
    let mut h_eigs = Vec::new();
    let mut h_res = Vec::new();
    let mut lc02 = CMat::zeros(dims[2], dims[0]);
    for (deg, basis) in bases.iter().enumerate() {
        let m = basis.dim();
        let mut hm = CMat::zeros(m, m);
        for (col, h) in basis.forms.iter().enumerate() {
            let up = if deg + 2 <= 4 { Some(h.apply_fiber(&lc, deg + 2)) } else { None };
            let down = if deg >= 2 { Some(h.apply_fiber(&lam, deg - 2)) } else { None };
            if let Some(u) = &up {
                if deg + 2 <= 2 {
                    let proj = bases[deg + 2].project(u);
                    harm_res = harm_res.max(u.minus(&proj).norm() / h.norm());
                    let c = bases[deg + 2].coefficients(u);
                    for (row, z) in c.iter().enumerate() {
                        lc02[(row, col)] = *z;
                    }
                }
            }
            if let Some(dn) = &down {
                let proj = bases[deg - 2].project(dn);
                harm_res = harm_res.max(dn.minus(&proj).norm() / h.norm());
            }
            // H h = ½(Λ_c L_c − L_c Λ_c) h.
            let a = up.map(|u| u.apply_fiber(&lam, deg));
            let b = down.map(|d| d.apply_fiber(&lc, deg));
            let hh = sum_opt(a, b, -1.0).unwrap_or_else(|| h.scale_re(0.0)).scale_re(0.5);
            let c = basis.coefficients(&hh);
            for (row, z) in c.iter().enumerate() {
                hm[(row, col)] = *z;
            }
        }
        let expected = 2.0 - 2.0 * deg as f64;
        let mut eigs: Vec<f64> = if m > 0 {
            hermitian_eigen(&hm).0
        } else {
            Vec::new()
        };
        eigs.sort_by(f64::total_cmp);
        let res = (&hm - CMat::identity(m, m) * C64::new(expected, 0.0)).norm();
        h_eigs.push(eigs);
        h_res.push(res);
    }
    let sv = if dims[0] > 0 && dims[2] > 0 {
        lc02.clone().singular_values().iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    Ok(Sl2Action {
        dims,
        h_eigenvalues: h_eigs,
        h_residuals: h_res,
        harmonicity_residual: harm_res,
        lc_min_singular_value: sv,
        contraction_on_h0: 0.0,
    })
}

/// Real matrix of an ℝ-linear map `F` on the real span of an orthonormal
/// complex basis `h_1…h_m, √−1h_1…√−1h_m`, with the largest component of
/// `F(e_b)` outside that span (relative).
pub fn real_action_matrix(
    basis: &HarmonicBasis,
    f: impl Fn(&MatrixForm) -> Result<MatrixForm>,
) -> Result<(DMatrix<f64>, f64)> {
    let m = basis.dim();
    let real_basis: Vec<MatrixForm> = basis
        .forms
        .iter()
        .cloned()
        .chain(basis.forms.iter().map(|h| h.scale(C64::new(0.0, 1.0))))
        .collect();
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    let mut leak: f64 = 0.0;
    for (b, e) in real_basis.iter().enumerate() {
        let img = f(e)?;
        let proj = basis.project(&img);
        leak = leak.max(img.minus(&proj).norm() / e.norm());
        for (a, ea) in real_basis.iter().enumerate() {
            out[(a, b)] = img.l2_inner(ea)?.re;
        }
    }
    Ok((out, leak))
}

/// The quaternion action `I, J̄, K̄` on harmonic `(1,0)`-forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuaternionActionCheck {
    /// Real dimension of the harmonic space.
    pub real_dim: usize,
    /// Largest relative component leaving the harmonic space.
    pub invariance_residual: f64,
    /// `max(‖I² + 1‖, ‖J̄² + 1‖, ‖K̄² + 1‖)`.
    pub square_residual: f64,
    /// `max(‖IJ̄ − K̄‖, ‖J̄I + K̄‖)`.
    pub anticommutation_residual: f64,
    /// `max ‖Q − Id‖` with `Q` the action of unit quaternion `d + aI + bJ̄ + cK̄`
    /// composed with its inverse, over sampled unit quaternions.
    pub group_residual: f64,
}

/// The real matrices of `I` (multiplicative action), `J̄` and `K̄ = I∘J̄` on a
/// harmonic basis of `(1,0)`-forms.
pub fn quaternion_action_matrices(
    basis: &HarmonicBasis,
    tag: RealStructureTag,
) -> Result<([DMatrix<f64>; 3], f64)> {
    let mi = FRAME.multiplicative(&FRAME.structure_i()).matrix().clone();
    let (ia, l1) = real_action_matrix(basis, |x| Ok(x.apply_fiber(&mi, x.degree())))?;
    let (ja, l2) = real_action_matrix(basis, |x| x.bar_j(tag))?;
    let (ka, l3) = real_action_matrix(basis, |x| Ok(x.bar_j(tag)?.apply_fiber(&mi, x.degree())))?;
    Ok(([ia, ja, ka], l1.max(l2).max(l3)))
}

/// Verifies that `{d + aI + bJ̄ + cK̄}` acts on the harmonic `(1,0)`-forms
/// as the unit quaternions.
pub fn su2_on_cohomology(conn: &HermitianConnection, basis: &HarmonicBasis) -> Result<QuaternionActionCheck> {
    for l in [FRAME.structure_i(), FRAME.structure_j(), FRAME.structure_k()] {
        let res = newlander_test(conn, &l)?;
        if res > HYPOTHESIS_TOLERANCE {
            return Err(HyperholError::HypothesisViolated { check: "hyperholomorphy".into(), residual: res });
        }
    }
    let ([ia, ja, ka], leak) = quaternion_action_matrices(basis, conn.bundle().real_structure())?;
    let n = ia.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let sq = (&ia * &ia + &id).norm().max((&ja * &ja + &id).norm()).max((&ka * &ka + &id).norm());
    let anti = (&ia * &ja - &ka).norm().max((&ja * &ia + &ka).norm());
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut group: f64 = 0.0;
    for _ in 0..20 {
        let q = crate::quaternion_frame::random_unit_quaternion(&mut rng);
        let m = &id * q.w + &ia * q.i + &ja * q.j + &ka * q.k;
        let minv = &id * q.w - &ia * q.i - &ja * q.j - &ka * q.k;
        group = group.max((&m * &minv - &id).norm());
    }
    Ok(QuaternionActionCheck {
        real_dim: n,
        invariance_residual: leak,
        square_residual: sq,
        anticommutation_residual: anti,
        group_residual: group,
    })
}

/// One row of the `(p,q)` table: the complexified harmonic space of degree
/// `n` split by the eigenvalues of the complexified `J̄`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PqRow {
    /// Degree `n`.
    pub degree: usize,
    /// `dim_ℂ (H^n ⊗_ℝ ℂ) = 2 dim_ℂ H^n`.
    pub total: usize,
    /// `(label, dimension)` pairs.
    pub entries: Vec<(String, usize)>,
}

/// Dimensions of the `Δ_δ`-harmonic spaces split by type.
///
/// `J̄` is ℂ-antilinear, so its eigenspaces live in the complexification
/// `H^n ⊗_ℝ ℂ`: in degree 1 the `+√−1` / `−√−1` eigenspaces are the `(1,0)`
/// and `(0,1)` parts, in degree 2 the `+1` eigenspace is `(1,1)` and the `−1`
/// eigenspace is `(2,0) ⊕ (0,2)`.  Degree 0 is reported as `(0,0)`.
pub fn pq_cohomology(conn: &HermitianConnection) -> Result<Vec<PqRow>> {
    for l in [FRAME.structure_i(), FRAME.structure_j(), FRAME.structure_k()] {
        let res = newlander_test(conn, &l)?;
        if res > HYPOTHESIS_TOLERANCE {
            return Err(HyperholError::HypothesisViolated { check: "hyperholomorphy".into(), residual: res });
        }
    }
    let tag = conn.bundle().real_structure();
    let mut rows = Vec::new();
    for n in 0..=2usize {
        let lap = Laplacian::new(LaplacianKind::Delta, conn, Domain::holomorphic(n))?;
        let basis = lap.harmonic_basis()?;
        let total = 2 * basis.dim();
        if n == 0 {
            rows.push(PqRow { degree: 0, total, entries: vec![("(0,0)".into(), total)] });
            continue;
        }
        let (jm, _) = real_action_matrix(&basis, |x| x.bar_j(tag))?;
        let eig = jm.complex_eigenvalues();
        let count = |target: C64| eig.iter().filter(|z| (*z - target).norm() < 1e-6).count();
        let entries = if n == 1 {
            vec![
                ("(1,0)".into(), count(C64::new(0.0, 1.0))),
                ("(0,1)".into(), count(C64::new(0.0, -1.0))),
            ]
        } else {
            vec![
                ("(2,0)+(0,2)".into(), count(C64::new(-1.0, 0.0))),
                ("(1,1)".into(), count(C64::new(1.0, 0.0))),
            ]
        };
        rows.push(PqRow { degree: n, total, entries });
    }
    Ok(rows)
}

/// Checks that the multiplicative action of `L` maps the `Δ_{∂_I}`-harmonic
/// `p`-forms onto the `Δ_{∂_{I^L}}`-harmonic ones, `I^L = LIL⁻¹`.  Returns
/// `(rank before, rank after, projection residual)`.
pub fn twistor_harmonic_transport(
    conn: &HermitianConnection,
    l: &InducedStructure,
    p: usize,
) -> Result<(usize, usize, f64)> {
    let i = FRAME.structure_i();
    let target = conjugate_structure(&FRAME, &l.quaternion(), &i);
    let b1 = Laplacian::new(LaplacianKind::Partial(i), conn, Domain::Degree(p))?.harmonic_basis()?;
    let b2 = Laplacian::new(LaplacianKind::Partial(target), conn, Domain::Degree(p))?.harmonic_basis()?;
    let m = FRAME.multiplicative(l).matrix().clone();
    let mut worst: f64 = 0.0;
    for h in &b1.forms {
        let img = h.apply_fiber(&m, p);
        worst = worst.max(img.minus(&b2.project(&img)).norm() / img.norm());
    }
    Ok((b1.dim(), b2.dim(), worst))
}
