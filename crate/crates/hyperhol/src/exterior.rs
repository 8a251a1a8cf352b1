//! Pointwise exterior algebra Λ*(ℝⁿ)⊗ℂ of a real vector space with its
//! standard orthonormal coframe.
//!
//! Basis elements are the monomials `e_S = e_{s1}∧…∧e_{sp}` for sorted index
//! sets `S`, ordered first by degree and then lexicographically.  Operators on
//! the algebra are dense complex matrices of size `2ⁿ × 2ⁿ` acting on
//! coefficient vectors; the flat metric makes the monomial basis orthonormal.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Dense complex matrix used for fiber operators.
pub type CMat = DMatrix<C64>;

/// The exterior algebra of `ℝⁿ` (complexified), `n ≤ 12`.
#[derive(Debug, Clone)]
pub struct ExteriorAlgebra {
    dim: usize,
    masks: Vec<u32>,
    index_of_mask: Vec<usize>,
    degree_offsets: Vec<usize>,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Sign of the permutation sorting the concatenation `s ++ t` of two disjoint
/// sorted index sets, given as bitmasks.
pub fn merge_sign(s: u32, t: u32) -> f64 {
    // Each element of t must move past every larger element of s.
    let mut inversions = 0u32;
    let mut rest = t;
    while rest != 0 {
        let b = rest.trailing_zeros();
        inversions += (s >> (b + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl ExteriorAlgebra {
    /// Builds the algebra of `ℝ^dim`.
    pub fn new(dim: usize) -> Self {
        assert!(dim <= 12, "exterior algebra dimension too large");
        let total = 1usize << dim;
        let mut masks = Vec::with_capacity(total);
        let mut degree_offsets = Vec::with_capacity(dim + 2);
        for p in 0..=dim {
            degree_offsets.push(masks.len());
            let mut of_degree: Vec<u32> = (0..total as u32)
                .filter(|m| m.count_ones() as usize == p)
                .collect();
            // Lexicographic order on the sorted index tuples.
            of_degree.sort_by_key(|m| indices_of(*m));
            masks.extend(of_degree);
        }
        degree_offsets.push(masks.len());
        let mut index_of_mask = vec![0usize; total];
        for (i, m) in masks.iter().enumerate() {
            index_of_mask[*m as usize] = i;
        }
        ExteriorAlgebra {
            dim,
            masks,
            index_of_mask,
            degree_offsets,
        }
    }

    /// Dimension `n` of the underlying real vector space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total dimension `2ⁿ`.
    pub fn size(&self) -> usize {
        self.masks.len()
    }

    /// Bitmask of the basis element with global index `i`.
    pub fn mask(&self, i: usize) -> u32 {
        self.masks[i]
    }

    /// Global index of the basis monomial with the given bitmask.
    pub fn index(&self, mask: u32) -> usize {
        self.index_of_mask[mask as usize]
    }

    /// Global index of the monomial built from the sorted 0-based indices.
    pub fn index_of(&self, indices: &[usize]) -> usize {
        self.index(indices.iter().fold(0u32, |m, &i| m | (1 << i)))
    }

    /// Degree of the basis element with global index `i`.
    pub fn degree_of(&self, i: usize) -> usize {
        self.masks[i].count_ones() as usize
    }

    /// Global index range of degree-`p` monomials.
    pub fn degree_range(&self, p: usize) -> std::ops::Range<usize> {
        self.degree_offsets[p]..self.degree_offsets[p + 1]
    }

    /// Number of degree-`p` monomials, `C(n, p)`.
    pub fn degree_dim(&self, p: usize) -> usize {
        binomial(self.dim, p)
    }

    /// Left exterior multiplication by the 1-form `Σ v_m e_m`.
    pub fn eps(&self, v: &[C64]) -> CMat {
        let n = self.size();
        let mut out = CMat::zeros(n, n);
        for (col, &s) in self.masks.iter().enumerate() {
            for (m, &vm) in v.iter().enumerate() {
                if vm == C64::new(0.0, 0.0) || s & (1 << m) != 0 {
                    continue;
                }
                let t = s | (1 << m);
                let below = (s & ((1u32 << m) - 1)).count_ones();
                let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                out[(self.index(t), col)] += vm * sign;
            }
        }
        out
    }

    /// Left exterior multiplication by the basis 1-form `e_m`.
    pub fn eps_basis(&self, m: usize) -> CMat {
        let mut v = vec![C64::new(0.0, 0.0); self.dim];
        v[m] = C64::new(1.0, 0.0);
        self.eps(&v)
    }

    /// Interior product with the basis vector dual to `e_m` (adjoint of
    /// [`Self::eps_basis`]).
    pub fn iota_basis(&self, m: usize) -> CMat {
        self.eps_basis(m).adjoint()
    }

    /// Multiplicative extension of a real linear map `l` of the coframe:
    /// `e_S ↦ (l e_{s1})∧…∧(l e_{sp})`; its matrix entries are minors of `l`.
    pub fn multiplicative(&self, l: &DMatrix<f64>) -> CMat {
        let n = self.size();
        let mut out = CMat::zeros(n, n);
        for p in 0..=self.dim {
            for col in self.degree_range(p) {
                let s = indices_of(self.masks[col]);
                for row in self.degree_range(p) {
                    let t = indices_of(self.masks[row]);
                    let det = if p == 0 {
                        1.0
                    } else {
                        DMatrix::from_fn(p, p, |a, b| l[(t[a], s[b])]).determinant()
                    };
                    if det != 0.0 {
                        out[(row, col)] = C64::new(det, 0.0);
                    }
                }
            }
        }
        out
    }

    /// Derivation extension of a real linear map `l` of the coframe (Leibniz
    /// rule); equals `l` on 1-forms and vanishes on scalars.
    pub fn derivation(&self, l: &DMatrix<f64>) -> CMat {
        let n = self.size();
        let mut out = CMat::zeros(n, n);
        for m in 0..self.dim {
            let image: Vec<C64> = (0..self.dim).map(|a| C64::new(l[(a, m)], 0.0)).collect();
            out += self.eps(&image) * self.iota_basis(m);
        }
        out
    }

    /// Coefficient vector of the 2-form `ω(u, v) = g(l u, v)`, i.e.
    /// `ω = Σ_{a<b} l_{ba} e_a∧e_b`.
    pub fn two_form_of(&self, l: &DMatrix<f64>) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.size()];
        for a in 0..self.dim {
            for b in (a + 1)..self.dim {
                v[self.index_of(&[a, b])] = C64::new(l[(b, a)], 0.0);
            }
        }
        v
    }

    /// Left exterior multiplication by an arbitrary form.
    pub fn wedge_operator(&self, form: &[C64]) -> CMat {
        let n = self.size();
        let mut out = CMat::zeros(n, n);
        for (i, &c) in form.iter().enumerate() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let s = self.masks[i];
            for (col, &t) in self.masks.iter().enumerate() {
                if s & t != 0 {
                    continue;
                }
                out[(self.index(s | t), col)] += c * merge_sign(s, t);
            }
        }
        out
    }

    /// Exterior product of two coefficient vectors.
    pub fn wedge(&self, a: &[C64], b: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.size()];
        for (i, &x) in a.iter().enumerate() {
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            let s = self.masks[i];
            for (j, &y) in b.iter().enumerate() {
                let t = self.masks[j];
                if y == C64::new(0.0, 0.0) || s & t != 0 {
                    continue;
                }
                out[self.index(s | t)] += x * y * merge_sign(s, t);
            }
        }
        out
    }

    /// Hodge star for the orientation `e_1∧…∧e_n`: `α∧⋆β = ⟨α,β⟩ vol` on
    /// real monomials.
    pub fn hodge_star(&self) -> CMat {
        let n = self.size();
        let full = (1u32 << self.dim) - 1;
        let mut out = CMat::zeros(n, n);
        for (col, &s) in self.masks.iter().enumerate() {
            let c = full & !s;
            out[(self.index(c), col)] = C64::new(merge_sign(s, c), 0.0);
        }
        out
    }

    /// Projector onto the forms of total degree `p`.
    pub fn degree_projector(&self, p: usize) -> CMat {
        let n = self.size();
        let mut out = CMat::zeros(n, n);
        for i in self.degree_range(p) {
            out[(i, i)] = C64::new(1.0, 0.0);
        }
        out
    }

    /// Extracts the block of `op` mapping degree `p_in` to degree `p_out`.
    pub fn block(&self, op: &CMat, p_out: usize, p_in: usize) -> CMat {
        let ro = self.degree_range(p_out);
        let ri = self.degree_range(p_in);
        op.view((ro.start, ri.start), (ro.len(), ri.len())).into_owned()
    }
}

/// Sorted 0-based indices of a bitmask.
pub fn indices_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|b| mask & (1 << b) != 0).collect()
}

/// Complex 1-form coefficient vector from real entries.
pub fn real_vec(v: &[f64]) -> Vec<C64> {
    v.iter().map(|&x| C64::new(x, 0.0)).collect()
}
