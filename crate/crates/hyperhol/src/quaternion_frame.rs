//! Exact linear algebra of the quaternionic structure on the model fiber
//! `ℍᵐ ≅ ℝ^{4m}` and on its exterior algebra: induced complex structures, the
//! `su(2)` action on forms, Hodge-type projectors, Kähler and holomorphic
//! symplectic forms.
//!
//! Convention: `ℝ⁴ ≅ ℍ` via `(x₁,x₂,x₃,x₄) ↦ x₁ + x₂i + x₃j + x₄k`, and `I, J,
//! K` act by left quaternion multiplication.  Being orthogonal, the same
//! matrices act on the coframe `dx₁…dx₄`.  Kähler forms are
//! `ω_L(u, v) = g(Lu, v)` and the orientation is `dx₁∧dx₂∧dx₃∧dx₄`, for which
//! `ω_I, ω_J, ω_K` are self-dual.  For `ℍᵐ` the frame is block diagonal.

use crate::error::{HyperholError, Result};
use crate::exterior::{CMat, ExteriorAlgebra, C64};
use nalgebra::{DMatrix, Quaternion};
use rand::Rng;
use rand_distr::StandardNormal;

/// Tolerance for the unit-norm precondition of [`QuaternionFrame::induced`].
pub const UNIT_TRIPLE_TOL: f64 = 1e-9;

/// The three constant complex structures `I, J, K` on the coframe of `ℍᵐ`.
#[derive(Debug, Clone)]
pub struct QuaternionFrame {
    quaternionic_dim: usize,
    algebra: ExteriorAlgebra,
    i: DMatrix<f64>,
    j: DMatrix<f64>,
    k: DMatrix<f64>,
}

/// An induced complex structure `L = aI + bJ + cK`, `a² + b² + c² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedStructure {
    coeffs: [f64; 3],
    matrix: DMatrix<f64>,
}

/// A linear operator on the complexified exterior algebra of the fiber,
/// together with a human-readable label.
#[derive(Debug, Clone)]
pub struct ExteriorOperator {
    label: String,
    dim: usize,
    matrix: CMat,
}

/// Matrix of left multiplication by the quaternion `q` on `ℍ ≅ ℝ⁴`.
pub fn left_multiplication(q: &Quaternion<f64>) -> DMatrix<f64> {
    let basis = [
        Quaternion::new(1.0, 0.0, 0.0, 0.0),
        Quaternion::new(0.0, 1.0, 0.0, 0.0),
        Quaternion::new(0.0, 0.0, 1.0, 0.0),
        Quaternion::new(0.0, 0.0, 0.0, 1.0),
    ];
    let mut m = DMatrix::zeros(4, 4);
    for (col, e) in basis.iter().enumerate() {
        let image = q * e;
        m[(0, col)] = image.w;
        m[(1, col)] = image.i;
        m[(2, col)] = image.j;
        m[(3, col)] = image.k;
    }
    m
}

fn block_diagonal(block: &DMatrix<f64>, copies: usize) -> DMatrix<f64> {
    let b = block.nrows();
    let mut out = DMatrix::zeros(b * copies, b * copies);
    for c in 0..copies {
        out.view_mut((c * b, c * b), (b, b)).copy_from(block);
    }
    out
}

/// The canonical frame on `ℍ ≅ ℝ⁴` (the cotangent fiber of the 4-torus).
pub fn make_frame() -> QuaternionFrame {
    QuaternionFrame::quaternionic(1)
}

impl QuaternionFrame {
    /// The block-diagonal frame on `ℍᵐ ≅ ℝ^{4m}`.
    pub fn quaternionic(m: usize) -> Self {
        assert!((1..=2).contains(&m), "only ℍ and ℍ² are supported");
        let i = left_multiplication(&Quaternion::new(0.0, 1.0, 0.0, 0.0));
        let j = left_multiplication(&Quaternion::new(0.0, 0.0, 1.0, 0.0));
        let k = left_multiplication(&Quaternion::new(0.0, 0.0, 0.0, 1.0));
        QuaternionFrame {
            quaternionic_dim: m,
            algebra: ExteriorAlgebra::new(4 * m),
            i: block_diagonal(&i, m),
            j: block_diagonal(&j, m),
            k: block_diagonal(&k, m),
        }
    }

    /// Quaternionic dimension `m`.
    pub fn quaternionic_dim(&self) -> usize {
        self.quaternionic_dim
    }

    /// Real dimension `4m` of the fiber.
    pub fn real_dim(&self) -> usize {
        4 * self.quaternionic_dim
    }

    /// The exterior algebra of the fiber.
    pub fn algebra(&self) -> &ExteriorAlgebra {
        &self.algebra
    }

    /// Matrix of `I`.
    pub fn i(&self) -> &DMatrix<f64> {
        &self.i
    }

    /// Matrix of `J`.
    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    /// Matrix of `K`.
    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    /// Largest deviation from the frame invariants: `I² = J² = K² = −1`,
    /// `IJ = −JI = K` and orthogonality.
    pub fn invariant_residual(&self) -> f64 {
        let n = self.real_dim();
        let id = DMatrix::<f64>::identity(n, n);
        let mut worst: f64 = 0.0;
        for m in [&self.i, &self.j, &self.k] {
            worst = worst.max((m * m + &id).amax());
            worst = worst.max((m.transpose() * m - &id).amax());
        }
        worst = worst.max((&self.i * &self.j - &self.k).amax());
        worst = worst.max((&self.j * &self.i + &self.k).amax());
        worst
    }

    /// The induced structure `aI + bJ + cK`.
    pub fn induced(&self, a: f64, b: f64, c: f64) -> Result<InducedStructure> {
        let norm_sq = a * a + b * b + c * c;
        if (norm_sq - 1.0).abs() > UNIT_TRIPLE_TOL {
            return Err(HyperholError::NotUnitTriple { a, b, c, norm_sq });
        }
        Ok(InducedStructure {
            coeffs: [a, b, c],
            matrix: &self.i * a + &self.j * b + &self.k * c,
        })
    }

    /// `I` as an induced structure.
    pub fn structure_i(&self) -> InducedStructure {
        self.induced(1.0, 0.0, 0.0).expect("unit triple")
    }

    /// `J` as an induced structure.
    pub fn structure_j(&self) -> InducedStructure {
        self.induced(0.0, 1.0, 0.0).expect("unit triple")
    }

    /// `K` as an induced structure.
    pub fn structure_k(&self) -> InducedStructure {
        self.induced(0.0, 0.0, 1.0).expect("unit triple")
    }

    /// An induced structure drawn uniformly from the unit sphere.
    pub fn random_induced<R: Rng + ?Sized>(&self, rng: &mut R) -> InducedStructure {
        loop {
            let v: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 1e-6 {
                return self.induced(v[0] / n, v[1] / n, v[2] / n).expect("normalized");
            }
        }
    }

    /// Induced structure whose coefficients are those of the unit imaginary
    /// quaternion `q` (the real part must vanish).
    pub fn from_quaternion(&self, q: &Quaternion<f64>) -> Result<InducedStructure> {
        self.induced(q.i, q.j, q.k)
    }

    /// The fiber matrix of a unit quaternion `q = w + xi + yj + zk`, acting
    /// on the coframe as `w + xI + yJ + zK`.
    pub fn unit_quaternion_matrix(&self, q: &Quaternion<f64>) -> DMatrix<f64> {
        let n = self.real_dim();
        DMatrix::<f64>::identity(n, n) * q.w + &self.i * q.i + &self.j * q.j + &self.k * q.k
    }

    fn op(&self, label: impl Into<String>, matrix: CMat) -> ExteriorOperator {
        ExteriorOperator {
            label: label.into(),
            dim: self.real_dim(),
            matrix,
        }
    }

    /// Derivation extension `ad L` of `L` to forms of degree `p` (zero on the
    /// other degrees).
    pub fn ad_operator(&self, l: &InducedStructure, p: usize) -> ExteriorOperator {
        let full = self.algebra.derivation(&l.matrix);
        let proj = self.algebra.degree_projector(p);
        self.op(format!("ad {} (degree {p})", l.label()), &full * &proj)
    }

    /// Derivation extension of `L` on the whole algebra.
    pub fn ad_full(&self, l: &InducedStructure) -> ExteriorOperator {
        self.op(format!("ad {}", l.label()), self.algebra.derivation(&l.matrix))
    }

    /// Multiplicative extension of `L` on the whole algebra (the action of
    /// `L` on forms).
    pub fn multiplicative(&self, l: &InducedStructure) -> ExteriorOperator {
        self.op(format!("{} (multiplicative)", l.label()), self.algebra.multiplicative(&l.matrix))
    }

    /// Projector onto the `(p, q)`-forms of `L`: the `(p−q)√−1` eigenspace of
    /// `ad L` in degree `p + q`, built by Lagrange interpolation.
    pub fn type_projector(&self, l: &InducedStructure, p: usize, q: usize) -> ExteriorOperator {
        let n = p + q;
        let size = self.algebra.size();
        let ad = self.algebra.derivation(&l.matrix);
        let mut proj = self.algebra.degree_projector(n);
        let lambda = C64::new(0.0, p as f64 - q as f64);
        let id = CMat::identity(size, size);
        for pp in 0..=n {
            if pp == p {
                continue;
            }
            let mu = C64::new(0.0, pp as f64 - (n - pp) as f64);
            proj = (&ad - &id * mu) * proj / (lambda - mu);
        }
        // Entries are small dyadic rationals; clear interpolation round-off so
        // that empty types (e.g. (3,0) on ℍ) give exactly zero.
        proj.apply(|z| {
            if z.norm() < 1e-14 {
                *z = C64::new(0.0, 0.0);
            }
        });
        self.op(format!("Π^{{{p},{q}}}_{}", l.label()), proj)
    }

    /// Coefficient vector of the Kähler form `ω_L = g(L·,·)`.
    pub fn kahler_form(&self, l: &InducedStructure) -> Vec<C64> {
        self.algebra.two_form_of(&l.matrix)
    }

    /// The holomorphic symplectic form of `I`, `Ω = ω_J − √−1 ω_K`; it spans
    /// the `(2,0)`-forms of `I` on `ℍ` in this convention.
    pub fn holomorphic_symplectic_form(&self) -> Vec<C64> {
        let wj = self.kahler_form(&self.structure_j());
        let wk = self.kahler_form(&self.structure_k());
        wj.iter()
            .zip(&wk)
            .map(|(a, b)| a - C64::new(0.0, 1.0) * b)
            .collect()
    }

    /// Lefschetz operator `L_L = ω_L∧·`.
    pub fn lefschetz(&self, l: &InducedStructure) -> ExteriorOperator {
        let w = self.kahler_form(l);
        self.op(format!("L_{}", l.label()), self.algebra.wedge_operator(&w))
    }

    /// Contraction `Λ_L`, the pointwise adjoint of `L_L`.
    pub fn contraction(&self, l: &InducedStructure) -> ExteriorOperator {
        let w = self.kahler_form(l);
        self.op(
            format!("Λ_{}", l.label()),
            self.algebra.wedge_operator(&w).adjoint(),
        )
    }

    /// `L_c = L_J − √−1 L_K = Ω∧·`, the exact adjoint of `Λ_c`.
    pub fn lefschetz_c(&self) -> ExteriorOperator {
        let omega = self.holomorphic_symplectic_form();
        self.op("L_c", self.algebra.wedge_operator(&omega))
    }

    /// `Λ_c = Λ_J + √−1 Λ_K`.
    pub fn contraction_c(&self) -> ExteriorOperator {
        let omega = self.holomorphic_symplectic_form();
        self.op("Λ_c", self.algebra.wedge_operator(&omega).adjoint())
    }

    /// Orthogonal projector on `Λ²` onto the forms fixed by the isotropy
    /// group (unit quaternions acting multiplicatively).  The projector is
    /// the exact average over the 24-element binary tetrahedral group, whose
    /// invariants on `Λ²` coincide with those of the full group.
    pub fn su2_invariant_projector(&self) -> ExteriorOperator {
        let group = binary_tetrahedral_group();
        let size = self.algebra.size();
        let mut acc = CMat::zeros(size, size);
        for q in &group {
            acc += self.algebra.multiplicative(&self.unit_quaternion_matrix(q));
        }
        acc /= C64::new(group.len() as f64, 0.0);
        let proj = self.algebra.degree_projector(2);
        self.op("Π_inv", &proj * acc * &proj)
    }
}

/// The 24 unit quaternions `±1, ±i, ±j, ±k, (±1±i±j±k)/2`.
pub fn binary_tetrahedral_group() -> Vec<Quaternion<f64>> {
    let mut out = Vec::with_capacity(24);
    for s in [1.0, -1.0] {
        out.push(Quaternion::new(s, 0.0, 0.0, 0.0));
        out.push(Quaternion::new(0.0, s, 0.0, 0.0));
        out.push(Quaternion::new(0.0, 0.0, s, 0.0));
        out.push(Quaternion::new(0.0, 0.0, 0.0, s));
    }
    for bits in 0..16u32 {
        let sg = |b: u32| if bits & (1 << b) == 0 { 0.5 } else { -0.5 };
        out.push(Quaternion::new(sg(0), sg(1), sg(2), sg(3)));
    }
    out
}

/// A seeded random unit quaternion.
pub fn random_unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quaternion<f64> {
    loop {
        let q = Quaternion::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        let n = q.norm();
        if n > 1e-6 {
            return q / n;
        }
    }
}

impl InducedStructure {
    /// Coefficients `(a, b, c)`.
    pub fn coeffs(&self) -> [f64; 3] {
        self.coeffs
    }

    /// The real matrix `aI + bJ + cK`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// The unit imaginary quaternion `ai + bj + ck`.
    pub fn quaternion(&self) -> Quaternion<f64> {
        Quaternion::new(0.0, self.coeffs[0], self.coeffs[1], self.coeffs[2])
    }

    /// Short label: `I`, `J`, `K` or the coefficient triple.
    pub fn label(&self) -> String {
        match self.coeffs {
            [a, b, c] if a == 1.0 && b == 0.0 && c == 0.0 => "I".into(),
            [a, b, c] if a == 0.0 && b == 1.0 && c == 0.0 => "J".into(),
            [a, b, c] if a == 0.0 && b == 0.0 && c == 1.0 => "K".into(),
            [a, b, c] => format!("({a:.6},{b:.6},{c:.6})"),
        }
    }

    /// `‖L² + Id‖_max`.
    pub fn square_residual(&self) -> f64 {
        let n = self.matrix.nrows();
        (&self.matrix * &self.matrix + DMatrix::<f64>::identity(n, n)).amax()
    }
}

/// Conjugate `l` by the unit quaternion `r`: the induced structure with
/// quaternion `r l r⁻¹`.
pub fn conjugate_structure(
    frame: &QuaternionFrame,
    r: &Quaternion<f64>,
    l: &InducedStructure,
) -> InducedStructure {
    let q = r * l.quaternion() * r.try_inverse().expect("unit quaternion");
    frame.induced(q.i, q.j, q.k).expect("conjugation preserves unit norm")
}

/// An induced structure `R` with `R L R⁻¹ = L₂`: the midpoint of the great
/// circle arc from `L` to `L₂`.  Degenerate cases: `L₂ = L` returns `L`; for
/// `L₂ = −L` the lexicographically smallest unit vector orthogonal to `L` is
/// returned (coefficients rounded at `1e−12`).
pub fn rotation_between(
    frame: &QuaternionFrame,
    l: &InducedStructure,
    l2: &InducedStructure,
) -> InducedStructure {
    let a = l.coeffs;
    let b = l2.coeffs;
    let diff = (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max);
    if diff <= 1e-12 {
        return l.clone();
    }
    let sum = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
    let sum_norm = (sum[0] * sum[0] + sum[1] * sum[1] + sum[2] * sum[2]).sqrt();
    if sum_norm > 1e-12 {
        return frame
            .induced(sum[0] / sum_norm, sum[1] / sum_norm, sum[2] / sum_norm)
            .expect("normalized");
    }
    // Antipodal: minimise the coefficients lexicographically over the great
    // circle orthogonal to L.  The minimiser of the first coefficient that is
    // not constant on the circle is −(projection of that basis vector).
    for axis in 0..3 {
        let mut e = [0.0; 3];
        e[axis] = 1.0;
        let dot = a[axis];
        let proj = [e[0] - dot * a[0], e[1] - dot * a[1], e[2] - dot * a[2]];
        let n = (proj[0] * proj[0] + proj[1] * proj[1] + proj[2] * proj[2]).sqrt();
        if n > 1e-12 {
            let round = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
            let v = [round(-proj[0] / n), round(-proj[1] / n), round(-proj[2] / n)];
            let vn = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            return frame.induced(v[0] / vn, v[1] / vn, v[2] / vn).expect("normalized");
        }
    }
    unreachable!("a unit vector has a nonzero orthogonal projection of some basis vector")
}

impl ExteriorOperator {
    /// Wraps an explicit matrix.
    pub fn new(label: impl Into<String>, dim: usize, matrix: CMat) -> Self {
        ExteriorOperator {
            label: label.into(),
            dim,
            matrix,
        }
    }

    /// The label.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// The full `2ⁿ × 2ⁿ` matrix.
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Real dimension of the fiber.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The block mapping degree `p_in` into degree `p_out`, of size
    /// `C(n, p_out) × C(n, p_in)`.
    pub fn block(&self, p_out: usize, p_in: usize) -> CMat {
        let offset = |p: usize| (0..p).map(|q| binom(self.dim, q)).sum::<usize>();
        self.matrix
            .view(
                (offset(p_out), offset(p_in)),
                (binom(self.dim, p_out), binom(self.dim, p_in)),
            )
            .into_owned()
    }

    /// Applies the operator to a coefficient vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let x = nalgebra::DVector::from_column_slice(v);
        (&self.matrix * x).iter().copied().collect()
    }

    /// The adjoint operator.
    pub fn adjoint(&self) -> ExteriorOperator {
        ExteriorOperator {
            label: format!("{}*", self.label),
            dim: self.dim,
            matrix: self.matrix.adjoint(),
        }
    }
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_matches_hand_written_left_multiplication() {
        let f = make_frame();
        let i = DMatrix::from_row_slice(
            4,
            4,
            &[0., -1., 0., 0., 1., 0., 0., 0., 0., 0., 0., -1., 0., 0., 1., 0.],
        );
        assert_eq!(f.i(), &i);
        assert_eq!(f.invariant_residual(), 0.0);
    }

    #[test]
    fn kahler_forms_have_expected_components() {
        let f = make_frame();
        let a = f.algebra();
        let wi = f.kahler_form(&f.structure_i());
        assert_eq!(wi[a.index_of(&[0, 1])].re, 1.0);
        assert_eq!(wi[a.index_of(&[2, 3])].re, 1.0);
        let wj = f.kahler_form(&f.structure_j());
        assert_eq!(wj[a.index_of(&[0, 2])].re, 1.0);
        assert_eq!(wj[a.index_of(&[1, 3])].re, -1.0);
    }

    #[test]
    fn rotation_between_antipodes_uses_tie_break() {
        let f = make_frame();
        let i = f.structure_i();
        let minus_i = f.induced(-1.0, 0.0, 0.0).unwrap();
        let r = rotation_between(&f, &i, &minus_i);
        assert_eq!(r.coeffs(), [0.0, -1.0, 0.0]);
    }

    #[test]
    fn binary_tetrahedral_group_is_closed() {
        let g = binary_tetrahedral_group();
        for a in &g {
            for b in &g {
                let c = a * b;
                assert!(g.iter().any(|x| (x - c).norm() < 1e-12));
            }
        }
    }
}
