//! Spectral quaternionic Hodge theory on the flat hyperkähler 4-torus.
//!
//! The crate represents Hermitian connections and bundle-valued differential
//! forms on `T⁴ = ℝ⁴/(2πℤ)⁴` by band-limited Fourier coefficients and provides
//! the quaternionic Dolbeault operators, their Laplacians, harmonic theory,
//! hyperholomorphy diagnostics and the Kuranishi construction of
//! hyperholomorphic deformations.

pub mod error;
pub mod exterior;
pub mod quaternion_frame;
pub mod spectral_fields;
pub mod connections;
pub mod hodge;
pub mod hyperholomorphic;
pub mod deformation;

pub use error::{HyperholError, Result};
