//! The Hill operator `(D_t - κ)² + γ cos t` on `[0, 2π)` and the separable
//! spectrum of the effective Hamiltonian at `B = 2πℓ`.
//!
//! At those fields the fiber `H(k)` is unitarily equivalent to
//! `h(k₁) ⊗ I + I ⊗ h(k₂)`, so its bands are the sums `ε_m(k₁) + ε_n(k₂)`.
//! Band indices `m, n` below are 1-based, as in `ε₁ <= ε₂ <= …`.

use crate::error::{Error, Result};
use crate::hamiltonian::BlochMomentum;
use crate::linalg::{tridiagonal_eigensystem, tridiagonal_eigenvalues};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HillParams {
    pub gamma: f64,
    pub kappa: f64,
    /// Fourier modes `j = -N1..=N1`.
    pub n1: usize,
}

impl HillParams {
    pub fn new(gamma: f64, kappa: f64, n1: usize) -> Result<Self> {
        if n1 < 1 {
            return Err(Error::InvalidParameter("1D truncation N1 must be >= 1".into()));
        }
        Ok(Self { gamma, kappa, n1 })
    }

    fn dim(&self) -> usize {
        2 * self.n1 + 1
    }

    fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let n1 = self.n1 as i64;
        let diag = (-n1..=n1).map(|j| (j as f64 - self.kappa).powi(2)).collect();
        let off = vec![self.gamma / 2.0; self.dim() - 1];
        (diag, off)
    }
}

/// Lowest Hill eigenvalues with unit-norm coefficient vectors over `e_j`, `j = -N1..=N1`.
#[derive(Clone, Debug)]
pub struct OneDBand {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub fn one_d_bands(p: &HillParams, count: usize) -> Result<OneDBand> {
    if count > p.dim() {
        return Err(Error::InvalidParameter(format!("asked for {count} eigenvalues of a {}-mode 1D basis", p.dim())));
    }
    let (diag, off) = p.tridiagonal();
    let (mut values, mut vectors) = tridiagonal_eigensystem(&diag, &off)?;
    values.truncate(count);
    vectors.truncate(count);
    Ok(OneDBand { values, vectors })
}

/// `ε₁(κ), …, ε_count(κ)` without eigenvectors.
pub fn one_d_values(gamma: f64, kappa: f64, n1: usize, count: usize) -> Result<Vec<f64>> {
    let p = HillParams::new(gamma, kappa, n1)?;
    if count > p.dim() {
        return Err(Error::InvalidParameter(format!("asked for {count} eigenvalues of a {}-mode 1D basis", p.dim())));
    }
    let (diag, off) = p.tridiagonal();
    let mut values = tridiagonal_eigenvalues(&diag, &off)?;
    values.truncate(count);
    Ok(values)
}

/// `σ_j`: `0` for odd `j`, `1/2` for even `j`.
pub fn sigma(j: usize) -> f64 {
    if j % 2 == 1 {
        0.0
    } else {
        0.5
    }
}

/// Free gap `d_j(κ) = ε⁰_{j+1}(κ) - ε⁰_j(κ)` on `κ ∈ [0, 1/2]`.
pub fn free_gap(j: usize, kappa: f64) -> Result<f64> {
    if j < 1 {
        return Err(Error::InvalidParameter("gap index j must be >= 1".into()));
    }
    if !(0.0..=0.5).contains(&kappa) {
        return Err(Error::InvalidParameter(format!("free gaps are tabulated for kappa in [0, 1/2], got {kappa}")));
    }
    let a = ((j + 1) / 2) as f64;
    Ok(if j % 2 == 1 { (2.0 * a - 1.0) * (1.0 - 2.0 * kappa) } else { 4.0 * a * kappa })
}

/// The first `count` of the sorted sums `ε_m(k₁) + ε_n(k₂)`.
pub fn two_d_from_one_d(gamma: f64, k: BlochMomentum, count: usize, n1: usize) -> Result<Vec<f64>> {
    let e1 = one_d_values(gamma, k.k1, n1, 2 * n1 + 1)?;
    let e2 = one_d_values(gamma, k.k2, n1, 2 * n1 + 1)?;
    if count > e1.len() * e2.len() {
        return Err(Error::InvalidParameter(format!("asked for {count} sums of {}x{} values", e1.len(), e2.len())));
    }
    let mut sums: Vec<f64> = e1.iter().flat_map(|a| e2.iter().map(move |b| a + b)).collect();
    sums.sort_by(f64::total_cmp);
    sums.truncate(count);
    Ok(sums)
}

/// Index-tracked separable band `E_{m,n}(k) = ε_m(k₁) + ε_n(k₂)`.
pub fn separable_band(gamma: f64, pair: (usize, usize), k: BlochMomentum, n1: usize) -> Result<f64> {
    let (m, n) = pair;
    if m < 1 || n < 1 {
        return Err(Error::InvalidParameter("band indices are 1-based".into()));
    }
    let e1 = one_d_values(gamma, k.k1, n1, m)?;
    let e2 = one_d_values(gamma, k.k2, n1, n)?;
    Ok(e1[m - 1] + e2[n - 1])
}

/// Straight segment in the Brillouin zone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KPath {
    pub start: BlochMomentum,
    pub end: BlochMomentum,
}

impl KPath {
    pub fn new(start: BlochMomentum, end: BlochMomentum) -> Self {
        Self { start, end }
    }

    pub fn at(&self, t: f64) -> BlochMomentum {
        BlochMomentum::new(
            self.start.k1 + t * (self.end.k1 - self.start.k1),
            self.start.k2 + t * (self.end.k2 - self.start.k2),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub k: BlochMomentum,
    /// `E_a - E_b` at the crossing.
    pub residual: f64,
    pub diff_start: f64,
    pub diff_end: f64,
}

/// Bisection iterations; the path parameter is exhausted well before this.
const MAX_BISECTIONS: usize = 200;

/// Locates `E_a(k*) = E_b(k*)` on `path` by bisection on `E_a - E_b`.
///
/// Returns `Ok(None)` when the difference has the same strict sign at both ends.
pub fn crossing_locate(
    a: (usize, usize),
    b: (usize, usize),
    gamma: f64,
    path: KPath,
    n1: usize,
) -> Result<Option<Crossing>> {
    let diff = |t: f64| -> Result<f64> {
        let k = path.at(t);
        Ok(separable_band(gamma, a, k, n1)? - separable_band(gamma, b, k, n1)?)
    };
    let (d0, d1) = (diff(0.0)?, diff(1.0)?);
    let found = |t: f64, residual: f64| Crossing { t, k: path.at(t), residual, diff_start: d0, diff_end: d1 };
    if d0 == 0.0 {
        return Ok(Some(found(0.0, 0.0)));
    }
    if d1 == 0.0 {
        return Ok(Some(found(1.0, 0.0)));
    }
    if d0.signum() == d1.signum() {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut best_t, mut best) = if d0.abs() < d1.abs() { (0.0, d0) } else { (1.0, d1) };
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let dm = diff(mid)?;
        if dm.abs() < best.abs() {
            best_t = mid;
            best = dm;
        }
        if dm == 0.0 {
            break;
        }
        if dm.signum() == d0.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(found(best_t, best)))
}

/// Path certifying `(m, n) ~ (m-1, n+1)`: from `(σ_{m-1}, 1/2 - σ_n)` to `(1/2 - σ_{m-1}, σ_n)`.
pub fn same_level_path(m: usize, n: usize) -> KPath {
    KPath::new(
        BlochMomentum::new(sigma(m - 1), 0.5 - sigma(n)),
        BlochMomentum::new(0.5 - sigma(m - 1), sigma(n)),
    )
}

/// Path certifying `(h, n) ~ (h+2, n-1)`, and with `h = 1` also `(1, r-1) ~ (3, r-2)`:
/// `k₁ = 0`, `k₂` from `σ_{n-1}` to `1/2 - σ_{n-1}`.
pub fn vertical_path(n: usize) -> KPath {
    KPath::new(BlochMomentum::new(0.0, sigma(n - 1)), BlochMomentum::new(0.0, 0.5 - sigma(n - 1)))
}

/// One entry of the crossing inventory.
#[derive(Clone, Debug)]
pub struct ChainLink {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub path: KPath,
    pub crossing: Option<Crossing>,
}

/// Sign-change certificates for `(m, n) ~ (m-1, n+1)` with `m >= 2, n >= 1`
/// and `(1, r-1) ~ (3, r-2)` with `r >= 4`, for all `m + n`, `r` up to `budget`.
pub fn overlap_chain_checklist(gamma: f64, budget: usize, n1: usize) -> Result<Vec<ChainLink>> {
    let mut links = Vec::new();
    for r in 3..=budget {
        for m in 2..r {
            let (a, b) = ((m, r - m), (m - 1, r - m + 1));
            let path = same_level_path(m, r - m);
            links.push(ChainLink { a, b, path, crossing: crossing_locate(a, b, gamma, path, n1)? });
        }
        if r >= 4 {
            let (a, b) = ((1, r - 1), (3, r - 2));
            let path = vertical_path(r - 1);
            links.push(ChainLink { a, b, path, crossing: crossing_locate(a, b, gamma, path, n1)? });
        }
    }
    Ok(links)
}
