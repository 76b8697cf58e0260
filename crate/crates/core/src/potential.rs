//! Real `2πℤ²`-periodic potentials stored by their Fourier coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Frequency vector `n ∈ ℤ²` of the mode `exp(i(n₁x₁ + n₂x₂))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreqVector {
    pub n1: i64,
    pub n2: i64,
}

impl FreqVector {
    pub const fn new(n1: i64, n2: i64) -> Self {
        Self { n1, n2 }
    }

    pub fn neg(self) -> Self {
        Self::new(-self.n1, -self.n2)
    }

    pub fn norm_sqr(self) -> i64 {
        self.n1 * self.n1 + self.n2 * self.n2
    }

    pub fn max_abs(self) -> i64 {
        self.n1.abs().max(self.n2.abs())
    }

    /// True for the half of `ℤ² \ {0}` used to enumerate `±n` pairs once.
    pub fn is_canonical(self) -> bool {
        self.n1 > 0 || (self.n1 == 0 && self.n2 > 0)
    }
}

/// Sparse Fourier representation of a real periodic potential.
///
/// Hermitian symmetry `V̂(-n) = conj V̂(n)` holds for every stored mode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FourierPotential {
    coeffs: BTreeMap<FreqVector, Complex64>,
}

/// Tolerance on `|V̂(-n) - conj V̂(n)|` accepted on input.
const SYMMETRY_TOL: f64 = 1e-12;

impl FourierPotential {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a potential from coefficients listed for one or both of each `±n`.
    ///
    /// A missing partner is synthesized by conjugation; a supplied partner must
    /// agree with it. `V̂(0)` must be real. Exact zeros are dropped.
    pub fn from_coefficients(entries: impl IntoIterator<Item = (FreqVector, Complex64)>) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (n, v) in entries {
            if let Some(old) = coeffs.insert(n, v) {
                if (old - v).norm() > SYMMETRY_TOL {
                    return Err(Error::InvalidParameter(format!("conflicting coefficients for n = ({}, {})", n.n1, n.n2)));
                }
            }
        }
        let mut out = BTreeMap::new();
        for (&n, &v) in &coeffs {
            if n == FreqVector::new(0, 0) && v.im.abs() > SYMMETRY_TOL {
                return Err(Error::InvalidParameter("the mean V̂(0) of a real potential must be real".into()));
            }
            if let Some(&partner) = coeffs.get(&n.neg()) {
                if (partner - v.conj()).norm() > SYMMETRY_TOL * (1.0 + v.norm()) {
                    return Err(Error::InvalidParameter(format!(
                        "coefficients at ±({}, {}) are not complex conjugates",
                        n.n1, n.n2
                    )));
                }
            }
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            if n.is_canonical() || n == FreqVector::new(0, 0) || !coeffs.contains_key(&n.neg()) {
                out.insert(n, v);
                out.insert(n.neg(), v.conj());
            }
        }
        if let Some(v0) = out.get_mut(&FreqVector::new(0, 0)) {
            v0.im = 0.0;
        }
        Ok(Self { coeffs: out })
    }

    /// `V₀(cos x₁ + cos x₂)`: coefficient `V₀/2` at `(±1, 0)` and `(0, ±1)`.
    pub fn standard(v0: f64) -> Self {
        if v0 == 0.0 {
            return Self::zero();
        }
        let half = Complex64::new(v0 / 2.0, 0.0);
        let coeffs = [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .into_iter()
            .map(|(a, b)| (FreqVector::new(a, b), half))
            .collect();
        Self { coeffs }
    }

    pub fn coeff(&self, n: FreqVector) -> Complex64 {
        self.coeffs.get(&n).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (FreqVector, Complex64)> + '_ {
        self.coeffs.iter().map(|(&n, &v)| (n, v))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Bound on `|n₁|, |n₂|` over stored modes.
    pub fn max_freq(&self) -> i64 {
        self.coeffs.keys().map(|n| n.max_abs()).max().unwrap_or(0)
    }

    /// Heat flow `exp(BΔ/4)`: multiplies `V̂(n)` by `exp(-B|n|²/4)`.
    pub fn heat_smooth(&self, b: f64) -> Result<Self> {
        if !(b >= 0.0) {
            return Err(Error::InvalidParameter(format!("heat smoothing time B must be >= 0, got {b}")));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&n, &v)| (n, v * (-b * n.norm_sqr() as f64 / 4.0).exp()))
            .collect();
        Ok(Self { coeffs })
    }

    /// `Σ V̂(n) exp(i⟨n, x⟩)`, returned as a real number.
    pub fn evaluate(&self, x: [f64; 2]) -> f64 {
        let sum: Complex64 = self
            .coeffs
            .iter()
            .map(|(n, &v)| v * Complex64::from_polar(1.0, n.n1 as f64 * x[0] + n.n2 as f64 * x[1]))
            .sum();
        debug_assert!(sum.im.abs() < 1e-12 * (1.0 + sum.re.abs()));
        sum.re
    }
}
