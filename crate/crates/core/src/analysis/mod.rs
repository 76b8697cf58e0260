//! Experiment drivers: gap scans, symmetry checks at `k₀ = (1/2, 1/2)`,
//! Dirac-cone fits and the four-level perturbative spectrum.

mod dirac;
mod gap;
mod symmetry;

pub use dirac::{default_directions, dirac_fit, ConeFit, DEFAULT_RADII};
pub use gap::{
    four_level_check, four_level_prediction, gap_at, gap_scan, minimize_gap, perturbative_gap, FourLevelReport,
    GapMinimum, GapScan, GapSearch,
};
pub use symmetry::{interior_indices, symmetry_check, symmetry_matrices, SymmetryMatrices, SymmetryReport};

use crate::hamiltonian::BlochMomentum;

/// The symmetry point `k₀ = (1/2, 1/2)`.
pub const K0: BlochMomentum = BlochMomentum::new(0.5, 0.5);
