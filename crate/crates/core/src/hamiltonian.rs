//! Bloch fibers of the effective Hamiltonian in a square plane-wave truncation.
//!
//! In the `θ = 0` gauge the fiber at quasi-momentum `k` acts on `e_m` as
//!
//! ```text
//! H(k) e_m = |m - k|² e_m + Σ_n Ŵ(n) e^{-iBn₁n₂/2} e^{iBn₁(m₂+n₂-k₂)} e_{m+n}
//! ```
//!
//! and the `θ` gauge conjugates by `diag exp(-iθB(m₁-k₁)(m₂-k₂))`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigh, eigh_lowest, eigvalsh, EigenSystem, HermitianMatrix};
use crate::potential::{FourierPotential, FreqVector};

/// Modes `m ∈ ℤ²` with `|m₁|, |m₂| <= N`, ordered lexicographically by `(m₁, m₂)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlaneWaveBasis {
    cutoff: i64,
}

impl PlaneWaveBasis {
    pub fn new(cutoff: i64) -> Result<Self> {
        if cutoff < 0 {
            return Err(Error::InvalidParameter(format!("plane-wave cutoff must be >= 0, got {cutoff}")));
        }
        Ok(Self { cutoff })
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    /// Modes per axis, `2N + 1`.
    pub fn side(&self) -> usize {
        (2 * self.cutoff + 1) as usize
    }

    pub fn dim(&self) -> usize {
        self.side() * self.side()
    }

    pub fn contains(&self, m: (i64, i64)) -> bool {
        m.0.abs() <= self.cutoff && m.1.abs() <= self.cutoff
    }

    pub fn index(&self, m: (i64, i64)) -> Option<usize> {
        self.contains(m)
            .then(|| ((m.0 + self.cutoff) as usize) * self.side() + (m.1 + self.cutoff) as usize)
    }

    pub fn mode(&self, idx: usize) -> (i64, i64) {
        let side = self.side();
        ((idx / side) as i64 - self.cutoff, (idx % side) as i64 - self.cutoff)
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.dim()).map(|i| self.mode(i))
    }

    /// Index of `m + p`, if it lies in the basis.
    pub fn shift_index(&self, idx: usize, p: (i64, i64)) -> Option<usize> {
        let m = self.mode(idx);
        self.index((m.0 + p.0, m.1 + p.1))
    }
}

/// Quasi-momentum on `ℝ²`; the Brillouin torus is `ℝ²/ℤ²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochMomentum {
    pub k1: f64,
    pub k2: f64,
}

impl BlochMomentum {
    pub const fn new(k1: f64, k2: f64) -> Self {
        Self { k1, k2 }
    }

    /// Splits `k = r + p` with `r ∈ [0, 1)²` and `p ∈ ℤ²`.
    pub fn reduce(self) -> (Self, (i64, i64)) {
        let p = (self.k1.floor(), self.k2.floor());
        (Self::new(self.k1 - p.0, self.k2 - p.1), (p.0 as i64, p.1 as i64))
    }
}

/// Smoothed potential `W`, field `B = 2λ²` and gauge parameter `θ`.
#[derive(Clone, Debug)]
pub struct EffectiveParams {
    pub w: FourierPotential,
    pub b: f64,
    pub theta: f64,
}

impl EffectiveParams {
    pub fn new(w: FourierPotential, b: f64, theta: f64) -> Result<Self> {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("B must be finite and >= 0, got {b}")));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta must lie in [0, 1], got {theta}")));
        }
        Ok(Self { w, b, theta })
    }

    /// `W = e^{BΔ/4} V₀(cos x₁ + cos x₂)`, i.e. `γ = V₀e^{-B/4}`.
    pub fn standard(v0: f64, b: f64, theta: f64) -> Result<Self> {
        let w = FourierPotential::standard(v0).heat_smooth(b)?;
        Self::new(w, b, theta)
    }

    /// Smoothed standard potential with coupling `γ` given directly.
    pub fn from_gamma(gamma: f64, b: f64, theta: f64) -> Result<Self> {
        Self::new(FourierPotential::standard(gamma), b, theta)
    }
}

/// Fiber matrix `H(k)` on `basis`.
///
/// Couplings whose target leaves the truncation are dropped.
pub fn build_h_eff(p: &EffectiveParams, k: BlochMomentum, basis: &PlaneWaveBasis) -> Result<HermitianMatrix> {
    if basis.dim() == 0 {
        return Err(Error::InvalidParameter("empty plane-wave basis".into()));
    }
    let b = p.b;
    let mut h = HermitianMatrix::zeros(basis.dim());
    for (i, m) in basis.modes().enumerate() {
        let (d1, d2) = (m.0 as f64 - k.k1, m.1 as f64 - k.k2);
        h[(i, i)] = Complex64::new(d1 * d1 + d2 * d2 + p.w.coeff(FreqVector::new(0, 0)).re, 0.0);
    }
    let couplings: Vec<_> = p.w.iter().filter(|(n, _)| n.is_canonical()).collect();
    for (col, m) in basis.modes().enumerate() {
        for &(n, w) in &couplings {
            let Some(row) = basis.index((m.0 + n.n1, m.1 + n.n2)) else { continue };
            let (n1, n2) = (n.n1 as f64, n.n2 as f64);
            let phase = -b * n1 * n2 / 2.0 + b * n1 * ((m.1 + n.n2) as f64 - k.k2);
            let z = w * Complex64::from_polar(1.0, phase);
            h[(row, col)] += z;
            h[(col, row)] += z.conj();
        }
    }
    if p.theta != 0.0 {
        let phases: Vec<Complex64> = basis
            .modes()
            .map(|m| Complex64::from_polar(1.0, -p.theta * b * (m.0 as f64 - k.k1) * (m.1 as f64 - k.k2)))
            .collect();
        let dim = basis.dim();
        for r in 0..dim {
            for c in 0..dim {
                let z = h[(r, c)];
                if z.re != 0.0 || z.im != 0.0 {
                    h[(r, c)] = z * phases[r] * phases[c].conj();
                }
            }
        }
    }
    Ok(h)
}

/// Lowest `count` band energies `E₁(k) <= … <= E_count(k)`.
pub fn bands(p: &EffectiveParams, k: BlochMomentum, basis: &PlaneWaveBasis, count: usize) -> Result<Vec<f64>> {
    if count > basis.dim() {
        return Err(Error::InvalidParameter(format!("asked for {count} bands of a {}-mode basis", basis.dim())));
    }
    let mut values = eigvalsh(&build_h_eff(p, k, basis)?)?;
    values.truncate(count);
    Ok(values)
}

/// Full Bloch spectrum of one fiber.
pub fn bloch_spectrum(p: &EffectiveParams, k: BlochMomentum, basis: &PlaneWaveBasis) -> Result<EigenSystem> {
    eigh(&build_h_eff(p, k, basis)?)
}

/// Lowest `count` eigenpairs of one fiber.
pub fn lowest_states(p: &EffectiveParams, k: BlochMomentum, basis: &PlaneWaveBasis, count: usize) -> Result<EigenSystem> {
    eigh_lowest(&build_h_eff(p, k, basis)?, count)
}

/// Multiplication by `e^{i⟨x, p⟩}`: moves the coefficient of `e_{m-p}` to `e_m`.
///
/// Returns the shifted vector and the fraction of `‖v‖²` that left the basis.
pub fn sewing_shift(v: &[Complex64], p: (i64, i64), basis: &PlaneWaveBasis) -> (Vec<Complex64>, f64) {
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    let mut lost = 0.0;
    let mut total = 0.0;
    for (i, &z) in v.iter().enumerate() {
        total += z.norm_sqr();
        match basis.shift_index(i, p) {
            Some(j) => out[j] = z,
            None => lost += z.norm_sqr(),
        }
    }
    let fraction = if total > 0.0 { lost / total } else { 0.0 };
    (out, fraction)
}
