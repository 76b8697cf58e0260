//! Numerical laboratory for the Bloch bands of an electron in a 2D crystal
//! coupled to a circularly polarized cavity mode.
//!
//! The crate builds truncated plane-wave matrices for the effective
//! (photon-ground-state projected) Hamiltonian and for the full
//! crystal-cavity Hamiltonian in a plane-wave ⊗ Hermite basis, and on top of
//! those computes gaps, symmetry-protected Dirac points, the exact
//! one-dimensional factorization at `B = 2πℓ`, Chern numbers with the
//! Fourier-shift sewing of the Bloch bundle, and Berry curvature maps.
//!
//! Conventions: the lattice is `2πℤ²`, quasi-momenta live on `ℝ²/ℤ²`,
//! Fourier modes are `e_m(x) = (2π)⁻¹ exp(i⟨m, x⟩)`, and inner products are
//! linear in the first argument, `⟨u, v⟩ = Σ u_m conj(v_m)`.

pub mod analysis;
pub mod error;
pub mod full_model;
pub mod hamiltonian;
pub mod hill;
pub mod linalg;
pub mod potential;
pub mod topology;

pub use error::{Error, Result};
pub use potential::{FourierPotential, FreqVector};
pub use hamiltonian::{BlochMomentum, EffectiveParams, PlaneWaveBasis};
