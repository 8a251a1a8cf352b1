//! Brute-force oracles the experiments compare the library against.  They
//! share no code with the library's implementations.

use hyperhol::exterior::{CMat, C64};

/// Sign of the permutation sorting `seq` (distinct entries).
fn perm_sign(seq: &[usize]) -> f64 {
    let mut inversions = 0;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 { 1.0 } else { -1.0 }
}

/// Coefficient of `dx_e∧dx_f` in `Ω = Σ_b (dx_{4b+1} − √−1dx_{4b+2})∧(dx_{4b+3} − √−1dx_{4b+4})`
/// on `ℝ⁸` (0-based, `e < f`).
fn omega_entry(e: usize, f: usize) -> C64 {
    if e / 4 != f / 4 {
        return C64::new(0.0, 0.0);
    }
    match (e % 4, f % 4) {
        (0, 2) => C64::new(1.0, 0.0),
        (0, 3) => C64::new(0.0, -1.0),
        (1, 2) => C64::new(0.0, -1.0),
        (1, 3) => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 0.0),
    }
}

/// Index pairs `a < b` of `ℝ⁸` in lexicographic order.
fn pairs() -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for a in 0..8 {
        for b in a + 1..8 {
            v.push((a, b));
        }
    }
    v
}

/// `Λ_c²` of the 4-form `dx_a∧dx_b∧dx_c∧dx_d`, summed over every splitting
/// of its indices into two pairs.
fn contraction_sq(idx: [usize; 4]) -> C64 {
    let mut sorted = idx.to_vec();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return C64::new(0.0, 0.0);
    }
    let sign = perm_sign(&idx);
    let mut total = C64::new(0.0, 0.0);
    for (e, f) in pairs() {
        if !sorted.contains(&e) || !sorted.contains(&f) {
            continue;
        }
        let rest: Vec<usize> = sorted.iter().copied().filter(|x| *x != e && *x != f).collect();
        let eps = perm_sign(&[e, f, rest[0], rest[1]]);
        total += omega_entry(e, f).conj() * omega_entry(rest[0], rest[1]).conj() * eps;
    }
    total * sign
}

/// `Tr Λ_c²(β∧β)` for a matrix-valued 2-form on `ℝ⁸` given by its
/// coefficients on the monomials `dx_a∧dx_b` in lexicographic order.
pub fn bg_index_loop(beta: &[CMat]) -> C64 {
    let ps = pairs();
    let mut total = C64::new(0.0, 0.0);
    for (i, &(a, b)) in ps.iter().enumerate() {
        for (j, &(c, d)) in ps.iter().enumerate() {
            let p = contraction_sq([a, b, c, d]);
            if p != C64::new(0.0, 0.0) {
                total += (&beta[i] * &beta[j]).trace() * p;
            }
        }
    }
    total
}

/// Cone membership of `ρ = X dz₁ + Y dz₂` on a flat bundle:
/// `ι(ρ,ρ) = [X,Y] dz₁∧dz₂` with `‖dz₁∧dz₂‖² = 4` and `‖ρ‖² = 2(‖X‖² + ‖Y‖²)`.
pub fn cone_by_commutator(x: &CMat, y: &CMat, tol: f64) -> bool {
    let commutator = x * y - y * x;
    2.0 * commutator.norm() <= tol * 2.0 * (x.norm_squared() + y.norm_squared())
}
