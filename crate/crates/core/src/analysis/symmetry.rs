use num_complex::Complex64;

use super::K0;
use crate::error::Result;
use crate::hamiltonian::{build_h_eff, EffectiveParams, PlaneWaveBasis};
use crate::linalg::ComplexMatrix;

/// Unitaries acting at `k₀`: `S₀ e_m = (-1)^{m₁} e_{(m₁, 1-m₂)}` and
/// `S₁ e_m = e_{(1-m₁, 1-m₂)}`. Columns whose image leaves the box are zero.
#[derive(Clone, Debug)]
pub struct SymmetryMatrices {
    pub s0: ComplexMatrix,
    pub s1: ComplexMatrix,
}

pub fn symmetry_matrices(basis: &PlaneWaveBasis) -> SymmetryMatrices {
    let dim = basis.dim();
    let mut s0 = ComplexMatrix::zeros(dim, dim);
    let mut s1 = ComplexMatrix::zeros(dim, dim);
    for (c, (m1, m2)) in basis.modes().enumerate() {
        if let Some(r) = basis.index((m1, 1 - m2)) {
            let sign = if m1.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            s0[(r, c)] = Complex64::new(sign, 0.0);
        }
        if let Some(r) = basis.index((1 - m1, 1 - m2)) {
            s1[(r, c)] = Complex64::new(1.0, 0.0);
        }
    }
    SymmetryMatrices { s0, s1 }
}

/// Indices of modes with both components in `[1-N, N]`, the set mapped into
/// itself by both reflections.
pub fn interior_indices(basis: &PlaneWaveBasis) -> Vec<usize> {
    let n = basis.cutoff();
    basis
        .modes()
        .enumerate()
        .filter(|(_, (m1, m2))| (1 - n..=n).contains(m1) && (1 - n..=n).contains(m2))
        .map(|(i, _)| i)
        .collect()
}

/// Max-entry norms of the symmetry relations, restricted to interior rows and columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryReport {
    pub s0_square_defect: f64,
    pub s1_square_defect: f64,
    pub anticommutator: f64,
    pub commutator_s0: f64,
    pub commutator_s1: f64,
    pub h_norm: f64,
}

impl SymmetryReport {
    /// Commutator defects relative to `max |H_ij|`.
    pub fn relative_commutators(&self) -> (f64, f64) {
        let scale = self.h_norm.max(f64::MIN_POSITIVE);
        (self.commutator_s0 / scale, self.commutator_s1 / scale)
    }
}

fn interior_max(m: &ComplexMatrix, idx: &[usize]) -> f64 {
    let mut best = 0.0f64;
    for &r in idx {
        for &c in idx {
            best = best.max(m[(r, c)].norm());
        }
    }
    best
}

/// The reflections are written in the `θ = 0` gauge, so `H(k₀)` is built there
/// whatever `p.theta` is; other gauges are unitarily equivalent.
pub fn symmetry_check(p: &EffectiveParams, basis: &PlaneWaveBasis) -> Result<SymmetryReport> {
    let p0 = EffectiveParams { theta: 0.0, ..p.clone() };
    let h = build_h_eff(&p0, K0, basis)?;
    let h_norm = h.max_abs();
    let h = h.into_general();
    let SymmetryMatrices { s0, s1 } = symmetry_matrices(basis);
    let idx = interior_indices(basis);
    let id = ComplexMatrix::identity(basis.dim());
    let comm = |s: &ComplexMatrix| h.matmul(s).sub(&s.matmul(&h));
    Ok(SymmetryReport {
        s0_square_defect: interior_max(&s0.matmul(&s0).sub(&id), &idx),
        s1_square_defect: interior_max(&s1.matmul(&s1).sub(&id), &idx),
        anticommutator: interior_max(&s0.matmul(&s1).add(&s1.matmul(&s0)), &idx),
        commutator_s0: interior_max(&comm(&s0), &idx),
        commutator_s1: interior_max(&comm(&s1), &idx),
        h_norm,
    })
}
