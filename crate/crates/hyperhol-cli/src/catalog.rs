//! The catalog of named checks emitted by the experiments.

use crate::Experiment;
use serde::Serialize;

/// One catalog line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CatalogEntry {
    /// Check name as it appears in reports.
    pub name: &'static str,
    /// Experiment emitting the check.
    pub experiment: Experiment,
    /// The statement the check verifies.
    pub anchor: &'static str,
    /// Default threshold and how the value is compared with it.
    pub tolerance: &'static str,
}

const fn entry(
    name: &'static str,
    experiment: Experiment,
    anchor: &'static str,
    tolerance: &'static str,
) -> CatalogEntry {
    CatalogEntry { name, experiment, anchor, tolerance }
}

use Experiment::*;

const REL: &str = "≤ 1e-10 relative";

/// Every check, grouped by experiment.
pub const CATALOG: &[CatalogEntry] = &[
    entry("laplacian-sum-equals-full", Identities, "Kähler identities: Δ_∂ + Δ_∂̄ = Δ_∇", REL),
    entry("laplacian-difference-curvature", Identities, "Kähler identities: Δ_∂ − Δ_∂̄ = −√−1[Λ, Θ]", REL),
    entry("twisted-differential-laplacian", Identities, "Kähler identities: Δ_∇ equals the Laplacian of the twisted differential d^c", REL),
    entry("kodaira-contraction-partial", Identities, "Kodaira identity [Λ, ∂] = −√−1 ∂̄*", REL),
    entry("kodaira-contraction-dbar", Identities, "Kodaira identity [Λ, ∂̄] = √−1 ∂*", REL),
    entry("thm-4.1-laplacians", Identities, "quaternionic Laplacians: Δ_∂ = Δ_{∂^j} = 2Δ_δ = 2Δ_δ̄", REL),
    entry("partial-j-squares-to-zero", Identities, "∂^j ∘ ∂^j = 0", REL),
    entry("partial-j-anticommutes-with-partial", Identities, "∂∂^j = −∂^j∂", REL),
    entry("lefschetz-j-commutator-partial-star", Identities, "[L_J, ∂*] = ∂^j", REL),
    entry("lefschetz-j-commutator-delta-star", Identities, "[L_J, δ*] = √−1 δ̄", REL),
    entry("lefschetz-j-commutator-delta-bar-star", Identities, "[L_J, δ̄*] = −√−1 δ", REL),
    entry("partial-star-anticommutes-with-partial-j", Identities, "∂*∂^j + ∂^j∂* = 0", REL),
    entry("partial-j-star-anticommutes-with-partial", Identities, "(∂^j)*∂ + ∂(∂^j)* = 0", REL),
    entry("delta-star-anticommutes-with-delta-bar", Identities, "δ*δ̄ + δ̄δ* = 0", REL),
    entry("delta-bar-star-anticommutes-with-delta", Identities, "δ̄*δ + δδ̄* = 0", REL),
    entry("partial-anticommutes-with-delta", Identities, "∂δ + δ∂ = 0", REL),
    entry("partial-anticommutes-with-delta-bar", Identities, "∂δ̄ + δ̄∂ = 0", REL),
    entry("delta-anticommutes-with-delta-bar", Identities, "δδ̄ + δ̄δ = 0", REL),
    entry("partial-j-anticommutes-with-delta", Identities, "∂^jδ + δ∂^j = 0", REL),
    entry("twistor-conjugated-laplacian", Identities, "Δ_∂ for L is conjugate to Δ_∂ for I under the twistor rotation", REL),
    entry("bianchi-identity", Analyze, "Bianchi identity ∇Θ = 0", "≤ 1e-10 relative to ‖Θ‖"),
    entry("hyperholomorphic-contraction-free", Analyze, "invariant curvature has Λ_L Θ = 0 for every induced L", "≤ 1e-10 relative"),
    entry("hyperholomorphic-integrable", Analyze, "invariant curvature is of type (1,1) for every sampled L", "≤ 1e-10 relative"),
    entry("ineq-5.1-bg", Bg, "Bogomolov–Gieseker functional Tr Λ_c²(Θ_{2,0}∧Θ_{2,0}) is negative", "< 0 relative to ‖Θ‖²"),
    entry("bg-index-loop-oracle", Bg, "functional agrees with a brute-force index-loop evaluation", "≤ 1e-10 relative to ‖Θ‖²"),
    entry("bg-complete-expansion", Bg, "functional equals its coframe expansion", "≤ 1e-10 relative to ‖Θ‖²"),
    entry("bg-hermitian-coefficients", Bg, "A_ji = A_ij^† for the coframe coefficients", "≤ 1e-10 relative to ‖Θ‖"),
    entry("bg-trace-free", Bg, "Σ A_ii = 0", "≤ 1e-10 relative to ‖Θ‖"),
    entry("bg-full-representation", Bg, "Θ_{2,0} is reproduced by its coframe coefficients", "≤ 1e-10 relative to ‖Θ‖"),
    entry("bg-cross-reality", Bg, "C_ij = B_ij^† for the cross terms", "≤ 1e-10 relative to ‖Θ‖"),
    entry("bg-full-square", Bg, "Λ_c²(Θ∧Θ) only sees Θ_{2,0}∧Θ_{2,0}", "≤ 1e-10 relative to ‖Θ‖²"),
    entry("kuranishi-convergence", Kuranishi, "the series η = Σ η_n converges", "0 runs without convergence"),
    entry("kuranishi-closedness", Kuranishi, "every τ_n = Σ η_i∧η_j is ∂-closed", "≤ 1e-9 relative"),
    entry("kuranishi-exactness", Kuranishi, "every τ_n has no harmonic part", "≤ 1e-9 relative"),
    entry("kuranishi-left-inverse", Kuranishi, "∂η_n = −τ_n (Γ is a left inverse of ∂)", "≤ 1e-9 relative"),
    entry("kuranishi-hat-holomorphic", Kuranishi, "(2,0) + (0,2) part of the hat construction vanishes", "≤ 1e-9 relative"),
    entry("kuranishi-norm-recursion", Kuranishi, "‖η_n‖ ≤ ‖Γ‖ Σ ‖η_i‖‖η_j‖", "≤ 1"),
    entry("deformation-equation-residual", Kuranishi, "−∇η̂ = (ρ̂ + η̂)∧(ρ̂ + η̂)", "≤ 1e-9 relative to ‖ρ̂‖²"),
    entry("deformation-residual-agreement", Kuranishi, "direct residual equals the curvature difference", "≤ 1e-10 relative to ‖ρ̂‖²"),
    entry("deformation-norm-bound", Kuranishi, "‖η‖ ≤ ¼‖ρ‖ for small ρ", "≤ 0.25"),
    entry("cone-oracle-agreement", Cone, "ι(ρ,ρ) = 0 exactly when [X,Y] = 0 for constant ρ", "0 disagreements"),
    entry("sl2-weights", Sl2, "H acts by 2 − 2i on harmonic (i,0)-forms", REL),
    entry("sl2-harmonicity", Sl2, "L_c and Λ_c preserve harmonic forms", REL),
    entry("sl2-dimension-symmetry", Sl2, "dim H⁰ = dim H²", "0 difference"),
    entry("lefschetz-bijective", Sl2, "L_c : H⁰ → H² is bijective", "smallest singular value > 1e-6"),
    entry("tangent-action-closed", Tangent, "I, J̄, K̄ preserve harmonic End-valued (1,0)-forms", "≤ 1e-9 relative"),
    entry("tangent-quaternion-relations", Tangent, "I² = J̄² = K̄² = −1, IJ̄ = −J̄I = K̄", "≤ 1e-9"),
    entry("tangent-metric-symmetric", Tangent, "the L² metric is symmetric", "≤ 1e-9"),
    entry("tangent-metric-positive", Tangent, "the L² metric is positive definite", "smallest eigenvalue > 1e-6"),
    entry("tangent-metric-invariance", Tangent, "I, J̄, K̄ are isometries", "≤ 1e-9"),
    entry("tangent-omega-skew", Tangent, "Ω is antisymmetric", "≤ 1e-9 relative"),
    entry("tangent-omega-type", Tangent, "Ω is of type (2,0) for I", "≤ 1e-9 relative"),
    entry("tangent-omega-nondegenerate", Tangent, "Ω has full rank", "smallest singular value > 1e-6"),
    entry("tangent-symplectic-fit", Tangent, "Ω is a combination of the Kähler forms of J̄ and K̄", "≤ 1e-9 relative"),
    entry("flow-monotone", Flow, "the Yang–Mills residual never increases", "0 non-monotone runs"),
    entry("flow-target-reached", Flow, "flow from a small perturbation reaches a flat minimizer", "≤ 1e-6"),
    entry("pq-table-consistent", PqTable, "(p,q) dimensions sum to the complexified Betti numbers", "0 inconsistent rows"),
];

/// Catalog entries of one experiment.
pub fn checks_of(experiment: Experiment) -> impl Iterator<Item = &'static CatalogEntry> {
    CATALOG.iter().filter(move |e| e.experiment == experiment)
}

/// Tab-separated catalog listing: name, experiment, tolerance, anchor.
pub fn render() -> String {
    let mut s = String::new();
    for e in CATALOG {
        s.push_str(&format!("{}\t{}\t{}\t{}\n", e.name, e.experiment.name(), e.tolerance, e.anchor));
    }
    s.push_str(&format!("{} checks\n", CATALOG.len()));
    s
}
