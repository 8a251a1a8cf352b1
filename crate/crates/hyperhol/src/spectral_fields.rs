//! Band-limited Fourier representation of endomorphism-valued differential
//! forms on the flat torus `T⁴ = ℝ⁴/(2πℤ)⁴`.
//!
//! A [`MatrixForm`] of degree `p` stores, for every frequency `k ∈ ℤ⁴` with a
//! nonzero coefficient, one complex `r × r` matrix per monomial `dx_S`,
//! `|S| = p`.  The represented form is `Σ_k Σ_S α_{S,k} e^{√−1 k·x} dx_S`.
//! The volume of the torus is normalized to one, so that
//! `⟨α, β⟩ = Σ_{S,k} tr(α_{S,k} β_{S,k}^†)`.
//!
//! Products raise [`HyperholError::BandwidthOverflow`] instead of silently
//! dropping frequencies; explicitly truncating variants exist for exploratory
//! runs.

use crate::error::{HyperholError, Result};
use crate::exterior::{merge_sign, CMat, ExteriorAlgebra, C64};
use crate::quaternion_frame::{make_frame, QuaternionFrame};
use crate::quaternion_frame::InducedStructure;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, LazyLock, Mutex};

/// A frequency vector `k ∈ ℤ⁴`.
pub type Freq = [i32; 4];

/// Relative threshold below which coefficients may be pruned.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Exterior algebra of the cotangent fiber of `T⁴`.
pub static FIBER: LazyLock<ExteriorAlgebra> = LazyLock::new(|| ExteriorAlgebra::new(4));

/// The canonical quaternionic frame on the cotangent fiber of `T⁴`.
pub static FRAME: LazyLock<QuaternionFrame> = LazyLock::new(make_frame);

/// Sign/index table for products of degree-`p` and degree-`q` monomials:
/// `(s, t, u, sign)` with local indices in their respective degrees.
static PRODUCT_TABLES: LazyLock<Vec<Vec<Vec<(usize, usize, usize, f64)>>>> = LazyLock::new(|| {
    let a = &*FIBER;
    let mut tables = vec![vec![Vec::new(); 5]; 5];
    for p in 0..=4usize {
        for q in 0..=(4 - p) {
            let rp = a.degree_range(p);
            let rq = a.degree_range(q);
            let ru = a.degree_range(p + q);
            let mut entries = Vec::new();
            for s in rp.clone() {
                for t in rq.clone() {
                    let (ms, mt) = (a.mask(s), a.mask(t));
                    if ms & mt != 0 {
                        continue;
                    }
                    let u = a.index(ms | mt);
                    entries.push((s - rp.start, t - rq.start, u - ru.start, merge_sign(ms, mt)));
                }
            }
            tables[p][q] = entries;
        }
    }
    tables
});

/// Which anti-complex involution is applied to bundle-valued forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RealStructureTag {
    /// Complex conjugation of the coefficients (bundle with a real form).
    Scalar,
    /// `α ↦ −α^†` on `End(B)` tensored with form conjugation.
    Endomorphism,
}

/// An `End(ℂʳ)`-valued band-limited differential form on `T⁴`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixForm {
    rank: usize,
    degree: usize,
    cutoff: i32,
    coeffs: BTreeMap<Freq, Vec<C64>>,
}

/// `‖k‖_∞`.
pub fn freq_norm(k: &Freq) -> i32 {
    k.iter().map(|x| x.abs()).max().unwrap_or(0)
}

/// `k₁ + k₂`.
pub fn freq_add(a: &Freq, b: &Freq) -> Freq {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// `−k`.
pub fn freq_neg(a: &Freq) -> Freq {
    [-a[0], -a[1], -a[2], -a[3]]
}

/// All frequencies with `‖k‖_∞ ≤ n`, in lexicographic order.
pub fn frequencies_within(n: i32) -> Vec<Freq> {
    let mut out = Vec::new();
    for a in -n..=n {
        for b in -n..=n {
            for c in -n..=n {
                for d in -n..=n {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// `out += coeff · a · b` for row-major `r × r` matrices.
pub(crate) fn matmul_acc(out: &mut [C64], a: &[C64], b: &[C64], r: usize, coeff: C64) {
    for i in 0..r {
        for l in 0..r {
            let ail = a[i * r + l];
            if ail == C64::new(0.0, 0.0) {
                continue;
            }
            let f = ail * coeff;
            for j in 0..r {
                out[i * r + j] += f * b[l * r + j];
            }
        }
    }
}

/// `−m^†` (Endomorphism) or `conj(m)` (Scalar) of a row-major `r × r` matrix.
fn conj_matrix(tag: RealStructureTag, m: &[C64], r: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); r * r];
    for i in 0..r {
        for j in 0..r {
            out[i * r + j] = match tag {
                RealStructureTag::Scalar => m[i * r + j].conj(),
                RealStructureTag::Endomorphism => -m[j * r + i].conj(),
            };
        }
    }
    out
}

impl MatrixForm {
    /// The zero form.
    pub fn zero(rank: usize, degree: usize, cutoff: i32) -> Self {
        assert!(rank >= 1 && degree <= 4 && cutoff >= 0);
        MatrixForm {
            rank,
            degree,
            cutoff,
            coeffs: BTreeMap::new(),
        }
    }

    /// Rank `r` of the coefficient matrices.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Form degree `p`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Working cutoff `N_work`.
    pub fn cutoff(&self) -> i32 {
        self.cutoff
    }

    /// Number of monomials of this degree, `C(4, p)`.
    pub fn ncomp(&self) -> usize {
        FIBER.degree_dim(self.degree)
    }

    /// Length of one per-frequency coefficient block.
    pub fn block_len(&self) -> usize {
        self.ncomp() * self.rank * self.rank
    }

    /// Frequencies carrying a stored coefficient block.
    pub fn frequencies(&self) -> impl Iterator<Item = &Freq> {
        self.coeffs.keys()
    }

    /// Iterates over `(k, block)`; a block holds `ncomp` row-major matrices.
    pub fn iter(&self) -> impl Iterator<Item = (&Freq, &Vec<C64>)> {
        self.coeffs.iter()
    }

    /// The coefficient block at frequency `k`, if stored.
    pub fn block(&self, k: &Freq) -> Option<&Vec<C64>> {
        self.coeffs.get(k)
    }

    /// Mutable coefficient block at `k`, created as zeros when absent.
    pub fn block_mut(&mut self, k: Freq) -> &mut Vec<C64> {
        let len = self.block_len();
        self.coeffs.entry(k).or_insert_with(|| vec![C64::new(0.0, 0.0); len])
    }

    /// Replaces the block at `k`.
    pub fn set_block(&mut self, k: Freq, block: Vec<C64>) {
        assert_eq!(block.len(), self.block_len(), "coefficient block length");
        self.coeffs.insert(k, block);
    }

    /// Coefficient matrix of the monomial with local index `comp` at `k`.
    pub fn matrix(&self, k: &Freq, comp: usize) -> CMat {
        let r = self.rank;
        match self.coeffs.get(k) {
            Some(b) => CMat::from_row_slice(r, r, &b[comp * r * r..(comp + 1) * r * r]),
            None => CMat::zeros(r, r),
        }
    }

    /// Adds `m` to the coefficient of monomial `comp` at frequency `k`.
    pub fn add_matrix(&mut self, k: Freq, comp: usize, m: &CMat) {
        let r = self.rank;
        assert_eq!(m.shape(), (r, r));
        let block = self.block_mut(k);
        for i in 0..r {
            for j in 0..r {
                block[comp * r * r + i * r + j] += m[(i, j)];
            }
        }
    }

    /// Local index (within degree `p`) of the monomial `dx_S`, `S` given as
    /// sorted 1-based indices.
    pub fn component_index(indices_one_based: &[usize]) -> usize {
        let zero_based: Vec<usize> = indices_one_based.iter().map(|i| i - 1).collect();
        let p = zero_based.len();
        FIBER.index_of(&zero_based) - FIBER.degree_range(p).start
    }

    /// Sorted 1-based indices of the monomial with local index `comp`.
    pub fn component_indices(degree: usize, comp: usize) -> Vec<usize> {
        let global = FIBER.degree_range(degree).start + comp;
        crate::exterior::indices_of(FIBER.mask(global))
            .into_iter()
            .map(|i| i + 1)
            .collect()
    }

    /// A single-mode form `e^{√−1 k·x} m dx_S`.
    pub fn monomial(rank: usize, cutoff: i32, k: Freq, indices_one_based: &[usize], m: &CMat) -> Result<Self> {
        let mut out = MatrixForm::zero(rank, indices_one_based.len(), cutoff);
        if freq_norm(&k) > cutoff {
            return Err(HyperholError::BandwidthOverflow { needed: freq_norm(&k), cutoff });
        }
        out.add_matrix(k, Self::component_index(indices_one_based), m);
        Ok(out)
    }

    /// Largest `‖k‖_∞` carrying a nonzero coefficient.
    pub fn bandwidth(&self) -> i32 {
        self.coeffs
            .iter()
            .filter(|(_, b)| b.iter().any(|z| *z != C64::new(0.0, 0.0)))
            .map(|(k, _)| freq_norm(k))
            .max()
            .unwrap_or(0)
    }

    /// Same form with a different working cutoff.
    pub fn with_cutoff(&self, cutoff: i32) -> Result<Self> {
        if self.bandwidth() > cutoff {
            return Err(HyperholError::BandwidthOverflow { needed: self.bandwidth(), cutoff });
        }
        let mut out = self.clone();
        out.cutoff = cutoff;
        Ok(out)
    }

    /// Drops every frequency beyond the cutoff (explicit truncation).
    pub fn truncated(&self) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|k, _| freq_norm(k) <= out.cutoff);
        out
    }

    /// True if every coefficient vanishes exactly.
    pub fn is_zero(&self) -> bool {
        self.coeffs.values().all(|b| b.iter().all(|z| *z == C64::new(0.0, 0.0)))
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .values()
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Removes frequency blocks whose entries are all below
    /// `PRUNE_THRESHOLD` times the largest coefficient.
    pub fn pruned(&self) -> Self {
        let thr = PRUNE_THRESHOLD * self.max_abs();
        let mut out = self.clone();
        out.coeffs.retain(|_, b| b.iter().any(|z| z.norm() > thr));
        out
    }

    fn check_same_shape(&self, other: &MatrixForm, what: &str) -> Result<()> {
        if self.rank != other.rank || self.degree != other.degree || self.cutoff != other.cutoff {
            return Err(HyperholError::ShapeMismatch(format!(
                "{what}: (rank {}, degree {}, cutoff {}) vs (rank {}, degree {}, cutoff {})",
                self.rank, self.degree, self.cutoff, other.rank, other.degree, other.cutoff
            )));
        }
        Ok(())
    }

    /// `self + c · other`; panics on shape mismatch (internal invariant).
    pub fn axpy(&self, c: C64, other: &MatrixForm) -> MatrixForm {
        self.check_same_shape(other, "axpy").expect("matching shapes");
        let mut out = self.clone();
        for (k, b) in &other.coeffs {
            let dst = out.block_mut(*k);
            for (d, s) in dst.iter_mut().zip(b) {
                *d += c * s;
            }
        }
        out
    }

    /// `self + other`.
    pub fn plus(&self, other: &MatrixForm) -> MatrixForm {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    /// `self − other`.
    pub fn minus(&self, other: &MatrixForm) -> MatrixForm {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// `c · self`.
    pub fn scale(&self, c: C64) -> MatrixForm {
        let mut out = self.clone();
        for b in out.coeffs.values_mut() {
            for z in b.iter_mut() {
                *z *= c;
            }
        }
        out
    }

    /// `x · self` for real `x`.
    pub fn scale_re(&self, x: f64) -> MatrixForm {
        self.scale(C64::new(x, 0.0))
    }

    /// `⟨α, β⟩ = Σ tr(α_{S,k} β_{S,k}^†)`.
    pub fn l2_inner(&self, other: &MatrixForm) -> Result<C64> {
        self.check_same_shape(other, "l2_inner")?;
        let mut acc = C64::new(0.0, 0.0);
        for (k, a) in &self.coeffs {
            if let Some(b) = other.coeffs.get(k) {
                for (x, y) in a.iter().zip(b) {
                    acc += x * y.conj();
                }
            }
        }
        Ok(acc)
    }

    /// `‖α‖ = √⟨α, α⟩`.
    pub fn norm(&self) -> f64 {
        self.coeffs
            .values()
            .flat_map(|b| b.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Applies a pointwise fiber operator (a full `16 × 16` matrix on
    /// `Λ*(ℝ⁴)⊗ℂ`) whose range lies in degree `degree_out`.
    pub fn apply_fiber(&self, op: &CMat, degree_out: usize) -> MatrixForm {
        let block = FIBER.block(op, degree_out, self.degree);
        self.apply_fiber_block(&block, degree_out)
    }

    /// Applies an explicit degree block `C(4, degree_out) × C(4, p)`.
    pub fn apply_fiber_block(&self, block: &CMat, degree_out: usize) -> MatrixForm {
        let r2 = self.rank * self.rank;
        let mut out = MatrixForm::zero(self.rank, degree_out, self.cutoff);
        let nout = FIBER.degree_dim(degree_out);
        for (k, b) in &self.coeffs {
            let mut dst = vec![C64::new(0.0, 0.0); nout * r2];
            let mut any = false;
            for co in 0..nout {
                for ci in 0..self.ncomp() {
                    let m = block[(co, ci)];
                    if m == C64::new(0.0, 0.0) {
                        continue;
                    }
                    any = true;
                    for e in 0..r2 {
                        dst[co * r2 + e] += m * b[ci * r2 + e];
                    }
                }
            }
            if any {
                out.coeffs.insert(*k, dst);
            }
        }
        out
    }

    /// Applies `f` to every coefficient matrix (same frequency and monomial).
    pub fn map_matrices(&self, f: impl Fn(&CMat) -> CMat) -> MatrixForm {
        let r = self.rank;
        let mut out = MatrixForm::zero(r, self.degree, self.cutoff);
        for k in self.coeffs.keys() {
            for c in 0..self.ncomp() {
                out.add_matrix(*k, c, &f(&self.matrix(k, c)));
            }
        }
        out
    }

    fn product_impl(&self, other: &MatrixForm, truncate: bool) -> Result<MatrixForm> {
        if self.rank != other.rank || self.cutoff != other.cutoff {
            return Err(HyperholError::ShapeMismatch(format!(
                "wedge: rank/cutoff ({}, {}) vs ({}, {})",
                self.rank, self.cutoff, other.rank, other.cutoff
            )));
        }
        let p = self.degree + other.degree;
        if p > 4 {
            return Err(HyperholError::ShapeMismatch(format!(
                "wedge: total degree {p} exceeds 4"
            )));
        }
        let needed = self.bandwidth() + other.bandwidth();
        if !truncate && needed > self.cutoff {
            return Err(HyperholError::BandwidthOverflow { needed, cutoff: self.cutoff });
        }
        let r = self.rank;
        let r2 = r * r;
        let table = &PRODUCT_TABLES[self.degree][other.degree];
        let mut out = MatrixForm::zero(r, p, self.cutoff);
        for (k1, a) in &self.coeffs {
            for (k2, b) in &other.coeffs {
                let k = freq_add(k1, k2);
                if freq_norm(&k) > self.cutoff {
                    continue;
                }
                let dst = out.block_mut(k);
                for &(s, t, u, sign) in table {
                    matmul_acc(
                        &mut dst[u * r2..(u + 1) * r2],
                        &a[s * r2..(s + 1) * r2],
                        &b[t * r2..(t + 1) * r2],
                        r,
                        C64::new(sign, 0.0),
                    );
                }
            }
        }
        Ok(out)
    }

    /// Graded exterior product with matrix multiplication of coefficients.
    pub fn wedge(&self, other: &MatrixForm) -> Result<MatrixForm> {
        self.product_impl(other, false)
    }

    /// Exterior product dropping frequencies beyond the cutoff.
    pub fn wedge_truncated(&self, other: &MatrixForm) -> Result<MatrixForm> {
        self.product_impl(other, true)
    }

    /// Graded commutator `[α∧β] = α∧β − (−1)^{pq} β∧α`.
    pub fn graded_commutator(&self, other: &MatrixForm) -> Result<MatrixForm> {
        let ab = self.wedge(other)?;
        let ba = other.wedge(self)?;
        let sign = if (self.degree * other.degree) % 2 == 0 { -1.0 } else { 1.0 };
        Ok(ab.axpy(C64::new(sign, 0.0), &ba))
    }

    /// Flat exterior derivative: `(dα)_k = Σ_μ √−1 k_μ dx_μ∧α_k`.
    pub fn d(&self) -> Result<MatrixForm> {
        if self.degree >= 4 {
            return Err(HyperholError::ShapeMismatch("d of a 4-form".into()));
        }
        let mut out = MatrixForm::zero(self.rank, self.degree + 1, self.cutoff);
        let r2 = self.rank * self.rank;
        let table = &PRODUCT_TABLES[1][self.degree];
        for (k, b) in &self.coeffs {
            if k.iter().all(|x| *x == 0) {
                continue;
            }
            let dst = out.block_mut(*k);
            for &(mu, s, u, sign) in table {
                let c = C64::new(0.0, k[mu] as f64 * sign);
                for e in 0..r2 {
                    dst[u * r2 + e] += c * b[s * r2 + e];
                }
            }
        }
        Ok(out)
    }

    /// The real structure: form conjugation (`k ↦ −k`, conjugate
    /// coefficients) tensored with `m ↦ −m^†` or `m ↦ conj(m)`.
    pub fn real_t(&self, tag: RealStructureTag) -> MatrixForm {
        let r = self.rank;
        let r2 = r * r;
        let mut out = MatrixForm::zero(r, self.degree, self.cutoff);
        for (k, b) in &self.coeffs {
            let mut dst = Vec::with_capacity(b.len());
            for c in 0..self.ncomp() {
                dst.extend(conj_matrix(tag, &b[c * r2..(c + 1) * r2], r));
            }
            out.coeffs.insert(freq_neg(k), dst);
        }
        out
    }

    /// `T̃`, the derivation extending the real structure from 1-forms, under
    /// the convention that a monomial `m dx_S` factors as `(m dx_{s₁})∧dx_{s₂}
    /// ∧…∧dx_{s_p}` with scalar real factors after the first: `T̃(α) = T(α) +
    /// (p − 1)α`.  On real `p`-forms this is `p·α`.  The Leibniz derivation
    /// is not well defined on non-real forms (the value depends on how a
    /// product is factored); [`tilde_t_product`] evaluates it on an explicit
    /// factorization.
    pub fn tilde_t(&self, tag: RealStructureTag) -> Result<MatrixForm> {
        if self.degree == 0 {
            return Err(HyperholError::DegreeZero);
        }
        Ok(self
            .real_t(tag)
            .axpy(C64::new(self.degree as f64 - 1.0, 0.0), self))
    }

    /// `J̄ = J ∘ T` on forms of type `(p, 0)` for `I`.  Errors with
    /// `WrongType` when `α` has a component of another type beyond `1e−12`
    /// relative.
    pub fn bar_j(&self, tag: RealStructureTag) -> Result<MatrixForm> {
        check_holomorphic_type(self)?;
        Ok(self.bar_j_unchecked(tag))
    }

    /// `J̄` without the type check.
    pub fn bar_j_unchecked(&self, tag: RealStructureTag) -> MatrixForm {
        self.real_t(tag).apply_fiber(&FIBER_OPS.mult_j, self.degree)
    }

    /// `J̄⁻¹ = (−1)^p J̄`.
    pub fn bar_j_inverse(&self, tag: RealStructureTag) -> Result<MatrixForm> {
        let out = self.bar_j(tag)?;
        Ok(if self.degree % 2 == 1 { out.scale_re(-1.0) } else { out })
    }

    /// Pointwise trace, a rank-1 form of the same degree.
    pub fn trace(&self) -> MatrixForm {
        let r = self.rank;
        let mut out = MatrixForm::zero(1, self.degree, self.cutoff);
        for (k, b) in &self.coeffs {
            let mut dst = vec![C64::new(0.0, 0.0); self.ncomp()];
            for (c, d) in dst.iter_mut().enumerate() {
                for i in 0..r {
                    *d += b[c * r * r + i * r + i];
                }
            }
            out.coeffs.insert(*k, dst);
        }
        out
    }

    /// Tensor a scalar (rank-1) form with a constant matrix.
    pub fn scalar_times_matrix(scalar: &MatrixForm, m: &CMat) -> MatrixForm {
        assert_eq!(scalar.rank, 1);
        let r = m.nrows();
        let mut out = MatrixForm::zero(r, scalar.degree, scalar.cutoff);
        for (k, b) in &scalar.coeffs {
            for (c, z) in b.iter().enumerate() {
                out.add_matrix(*k, c, &(m * *z));
            }
        }
        out
    }

    /// The frequency-zero block (the mean over the torus).
    pub fn zero_mode(&self) -> MatrixForm {
        let mut out = MatrixForm::zero(self.rank, self.degree, self.cutoff);
        if let Some(b) = self.coeffs.get(&[0, 0, 0, 0]) {
            out.coeffs.insert([0, 0, 0, 0], b.clone());
        }
        out
    }

    /// Serializes to the documented JSON layout.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(MatrixFormJson::from(self)).expect("serializable")
    }

    /// Serializes to a JSON string.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&MatrixFormJson::from(self)).expect("serializable")
    }

    /// Parses the documented JSON layout.
    pub fn from_json(s: &str) -> Result<MatrixForm> {
        let j: MatrixFormJson =
            serde_json::from_str(s).map_err(|e| HyperholError::Serialization(e.to_string()))?;
        MatrixForm::try_from(j)
    }
}

/// Evaluates the Leibniz extension of `T` on an explicit product
/// `λ₁∧…∧λ_p` of 1-forms: `Σ_i λ₁∧…∧T(λ_i)∧…∧λ_p`.
pub fn tilde_t_product(factors: &[MatrixForm], tag: RealStructureTag) -> Result<MatrixForm> {
    if factors.is_empty() {
        return Err(HyperholError::DegreeZero);
    }
    let mut total: Option<MatrixForm> = None;
    for i in 0..factors.len() {
        let mut acc = if i == 0 { factors[0].real_t(tag) } else { factors[0].clone() };
        for (j, f) in factors.iter().enumerate().skip(1) {
            let g = if j == i { f.real_t(tag) } else { f.clone() };
            acc = acc.wedge(&g)?;
        }
        total = Some(match total {
            None => acc,
            Some(t) => t.plus(&acc),
        });
    }
    Ok(total.expect("nonempty"))
}

/// Frequently used fiber operators on `Λ*(ℝ⁴)⊗ℂ`.
pub struct FiberOps {
    /// Multiplicative action of `J`.
    pub mult_j: CMat,
    /// Projectors `Π^{p,q}_I` indexed by `p * 5 + q`.
    pub type_i: Vec<CMat>,
}

/// Cached fiber operators of the canonical frame.
pub static FIBER_OPS: LazyLock<FiberOps> = LazyLock::new(|| {
    let f = &*FRAME;
    let i = f.structure_i();
    let mut type_i = vec![CMat::zeros(16, 16); 25];
    for p in 0..=4usize {
        for q in 0..=(4 - p) {
            type_i[p * 5 + q] = f.type_projector(&i, p, q).matrix().clone();
        }
    }
    FiberOps {
        mult_j: f.multiplicative(&f.structure_j()).matrix().clone(),
        type_i,
    }
});

/// Cached type projectors `Π^{p,q}_L` (full `16 × 16` matrices, indexed by
/// `p * 5 + q`) for an induced structure.
pub fn type_projectors(l: &InducedStructure) -> Arc<Vec<CMat>> {
    static CACHE: LazyLock<Mutex<HashMap<[u64; 3], Arc<Vec<CMat>>>>> =
        LazyLock::new(|| Mutex::new(HashMap::new()));
    let key = l.coeffs().map(f64::to_bits);
    if let Some(found) = CACHE.lock().expect("cache lock").get(&key) {
        return found.clone();
    }
    let mut projs = vec![CMat::zeros(16, 16); 25];
    for p in 0..=4usize {
        for q in 0..=(4 - p) {
            projs[p * 5 + q] = FRAME.type_projector(l, p, q).matrix().clone();
        }
    }
    let projs = Arc::new(projs);
    CACHE.lock().expect("cache lock").insert(key, projs.clone());
    projs
}

impl MatrixForm {
    /// The `(p, q)`-part of the form with respect to `L` (zero unless
    /// `p + q` equals the degree).
    pub fn type_part(&self, l: &InducedStructure, p: usize, q: usize) -> MatrixForm {
        if p + q != self.degree {
            return MatrixForm::zero(self.rank, self.degree, self.cutoff);
        }
        self.apply_fiber(&type_projectors(l)[p * 5 + q], self.degree)
    }
}

/// A random form with independent standard complex Gaussian coefficients on
/// every frequency with `‖k‖_∞ ≤ bandwidth` (or on `modes` randomly chosen
/// such frequencies), scaled by `amplitude`.
pub fn random_form<R: Rng + ?Sized>(
    rng: &mut R,
    rank: usize,
    degree: usize,
    cutoff: i32,
    bandwidth: i32,
    modes: Option<usize>,
    amplitude: f64,
) -> MatrixForm {
    assert!(bandwidth <= cutoff, "random form bandwidth exceeds the cutoff");
    let all = frequencies_within(bandwidth);
    let chosen: Vec<Freq> = match modes {
        None => all,
        Some(m) => (0..m).map(|_| all[rng.random_range(0..all.len())]).collect(),
    };
    let mut out = MatrixForm::zero(rank, degree, cutoff);
    let len = out.block_len();
    for k in chosen {
        let block = out.block_mut(k);
        for z in block.iter_mut().take(len) {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += C64::new(re, im) * amplitude;
        }
    }
    out
}

/// The real part `(α + Tα)/2` of a form for the given real structure.
pub fn real_part(alpha: &MatrixForm, tag: RealStructureTag) -> MatrixForm {
    alpha.plus(&alpha.real_t(tag)).scale_re(0.5)
}

/// Errors unless `α` is of type `(p, 0)` for `I` within `1e−12` relative.
pub fn check_holomorphic_type(alpha: &MatrixForm) -> Result<()> {
    let p = alpha.degree();
    let proj = alpha.apply_fiber(&FIBER_OPS.type_i[p * 5], p);
    let off = alpha.minus(&proj).norm();
    let scale = alpha.norm().max(f64::MIN_POSITIVE);
    if off > 1e-12 * scale && off > 1e-300 {
        return Err(HyperholError::WrongType(format!(
            "expected a ({p},0)-form for I; other types have relative norm {:e}",
            off / scale
        )));
    }
    Ok(())
}

/// JSON entry of a [`MatrixForm`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFormEntryJson {
    /// Sorted 1-based indices of the monomial `dx_S`.
    pub component: Vec<usize>,
    /// Frequency vector.
    pub k: Freq,
    /// Row-major `[re, im]` pairs of the `r × r` coefficient.
    pub matrix: Vec<[f64; 2]>,
}

/// JSON layout of a [`MatrixForm`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFormJson {
    /// Rank `r`.
    pub rank: usize,
    /// Form degree.
    pub degree: usize,
    /// Working cutoff.
    pub cutoff: i32,
    /// Nonzero coefficients.
    pub entries: Vec<MatrixFormEntryJson>,
}

impl From<&MatrixForm> for MatrixFormJson {
    fn from(f: &MatrixForm) -> Self {
        let r2 = f.rank * f.rank;
        let mut entries = Vec::new();
        for (k, b) in &f.coeffs {
            for c in 0..f.ncomp() {
                let m = &b[c * r2..(c + 1) * r2];
                if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                    continue;
                }
                entries.push(MatrixFormEntryJson {
                    component: MatrixForm::component_indices(f.degree, c),
                    k: *k,
                    matrix: m.iter().map(|z| [z.re, z.im]).collect(),
                });
            }
        }
        MatrixFormJson {
            rank: f.rank,
            degree: f.degree,
            cutoff: f.cutoff,
            entries,
        }
    }
}

impl TryFrom<MatrixFormJson> for MatrixForm {
    type Error = HyperholError;

    fn try_from(j: MatrixFormJson) -> Result<Self> {
        if j.rank == 0 || j.degree > 4 || j.cutoff < 0 {
            return Err(HyperholError::Serialization("invalid rank, degree or cutoff".into()));
        }
        let mut out = MatrixForm::zero(j.rank, j.degree, j.cutoff);
        let r = j.rank;
        for e in j.entries {
            if e.component.len() != j.degree
                || e.component.windows(2).any(|w| w[0] >= w[1])
                || e.component.iter().any(|&i| !(1..=4).contains(&i))
            {
                return Err(HyperholError::Serialization(format!(
                    "invalid component {:?} for degree {}",
                    e.component, j.degree
                )));
            }
            if e.matrix.len() != r * r {
                return Err(HyperholError::Serialization("matrix size does not match rank".into()));
            }
            if freq_norm(&e.k) > j.cutoff {
                return Err(HyperholError::BandwidthOverflow { needed: freq_norm(&e.k), cutoff: j.cutoff });
            }
            let comp = MatrixForm::component_index(&e.component);
            let block = out.block_mut(e.k);
            for (idx, [re, im]) in e.matrix.iter().enumerate() {
                block[comp * r * r + idx] += C64::new(*re, *im);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn component_index_round_trips() {
        for p in 0..=4 {
            for comp in 0..FIBER.degree_dim(p) {
                let idx = MatrixForm::component_indices(p, comp);
                assert_eq!(MatrixForm::component_index(&idx), comp);
            }
        }
    }

    #[test]
    fn constant_matrix_wedge_by_hand() {
        let a1 = CMat::from_row_slice(2, 2, &[c(1., 0.), c(2., 0.), c(0., 1.), c(0., 0.)]);
        let a2 = CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(3., 0.)]);
        let x = MatrixForm::monomial(2, 2, [0; 4], &[1], &a1).unwrap();
        let y = MatrixForm::monomial(2, 2, [0; 4], &[2], &a2).unwrap();
        let w = x.wedge(&y).unwrap();
        assert_eq!(w.matrix(&[0; 4], MatrixForm::component_index(&[1, 2])), &a1 * &a2);
    }

    #[test]
    fn d_of_single_mode_function() {
        let one = CMat::identity(1, 1);
        let f = MatrixForm::monomial(1, 1, [1, 0, 0, 0], &[], &one).unwrap();
        let df = f.d().unwrap();
        assert_eq!(df.matrix(&[1, 0, 0, 0], 0)[(0, 0)], c(0.0, 1.0));
        assert_eq!(df.norm(), 1.0);
    }
}
