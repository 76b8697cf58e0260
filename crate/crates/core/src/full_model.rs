//! The crystal-cavity Hamiltonian after the `U_k` conjugation, in a
//! plane-wave ⊗ Hermite basis:
//!
//! ```text
//! H̃_J(k) = |D - k|² + J a†a + Σ_n V̂(n) e^{in₁(x₁ + B(D_{x₂} - k₂))} e^{in₂x₂} ⊗ M(n)
//! M(s)   = e^{-is₁√B w} e^{-is₂√B D_w}
//! ```
//!
//! Hermite index `a` runs over `0..=Nw`; the flattened index is `pw·(Nw+1) + a`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{bands, BlochMomentum, EffectiveParams, PlaneWaveBasis};
use crate::linalg::{eigvalsh, ComplexMatrix, HermitianMatrix};
use crate::potential::{FourierPotential, FreqVector};

/// Extra Hermite levels carried while exponentiating, before cropping.
pub const DEFAULT_PAD: usize = 20;
const PAD_STEP: usize = 20;
const PAD_CAP: usize = 200;
/// Tolerance on the analytic `(0,0)` element and on pad-to-pad agreement.
const DISPLACEMENT_TOL: f64 = 1e-9;
/// Default guard on the dense dimension of `H̃_J(k)`.
pub const DEFAULT_DIM_CAP: usize = 6000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductBasis {
    pub pw: PlaneWaveBasis,
    pub nw: usize,
}

impl ProductBasis {
    pub fn new(pw: PlaneWaveBasis, nw: usize) -> Self {
        Self { pw, nw }
    }

    pub fn dim(&self) -> usize {
        self.pw.dim() * (self.nw + 1)
    }

    pub fn index(&self, pw_index: usize, a: usize) -> usize {
        pw_index * (self.nw + 1) + a
    }
}

/// Potential `V`, field `B = 2λ²` and photon energy `J`.
#[derive(Clone, Debug)]
pub struct FullParams {
    pub v: FourierPotential,
    b: f64,
    pub j: f64,
}

impl FullParams {
    pub fn new(v: FourierPotential, b: f64, j: f64) -> Result<Self> {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("B must be finite and >= 0, got {b}")));
        }
        if !(j > 0.0 && j.is_finite()) {
            return Err(Error::InvalidParameter(format!("J must be finite and > 0, got {j}")));
        }
        Ok(Self { v, b, j })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn lambda(&self) -> f64 {
        (self.b / 2.0).sqrt()
    }

    /// The matching effective model, `W = e^{BΔ/4}V` in the `θ = 0` gauge.
    pub fn effective(&self) -> Result<EffectiveParams> {
        EffectiveParams::new(self.v.heat_smooth(self.b)?, self.b, 0.0)
    }
}

/// `w = (a + a†)/√2` and `D_w = i(a† - a)/√2` on levels `0..dim`.
fn ladder_generators(dim: usize) -> (ComplexMatrix, ComplexMatrix) {
    let mut x = ComplexMatrix::zeros(dim, dim);
    let mut p = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim.saturating_sub(1) {
        let s = ((j + 1) as f64 / 2.0).sqrt();
        x[(j, j + 1)] = Complex64::new(s, 0.0);
        x[(j + 1, j)] = Complex64::new(s, 0.0);
        p[(j, j + 1)] = Complex64::new(0.0, -s);
        p[(j + 1, j)] = Complex64::new(0.0, s);
    }
    (x, p)
}

fn displacement_on(dim: usize, s: (f64, f64), b: f64) -> ComplexMatrix {
    let (x, p) = ladder_generators(dim);
    let rb = b.sqrt();
    let ex = x.scale(Complex64::new(0.0, -s.0 * rb)).expm();
    let ep = p.scale(Complex64::new(0.0, -s.1 * rb)).expm();
    ex.matmul(&ep)
}

/// `M(s) = e^{-is₁√B w} e^{-is₂√B D_w}` on Hermite levels `0..=Nw`, for real `s`.
///
/// Computed on `Nw + pad + 1` levels and cropped. The pad grows until the
/// cropped block is stable and `M₀₀ = e^{-B|s|²/4} e^{-iBs₁s₂/2}` holds.
pub fn displacement_matrix_shift(s: (f64, f64), b: f64, nw: usize) -> Result<ComplexMatrix> {
    if !(b >= 0.0) {
        return Err(Error::InvalidParameter(format!("B must be >= 0, got {b}")));
    }
    let expected = Complex64::from_polar((-b * (s.0 * s.0 + s.1 * s.1) / 4.0).exp(), -b * s.0 * s.1 / 2.0);
    let mut pad = DEFAULT_PAD;
    let mut prev = displacement_on(nw + pad + 1, s, b).crop(nw + 1, nw + 1);
    let mut deviation = f64::INFINITY;
    while pad <= PAD_CAP {
        let next = displacement_on(nw + pad + PAD_STEP + 1, s, b).crop(nw + 1, nw + 1);
        let drift = next.sub(&prev).max_abs();
        deviation = (next[(0, 0)] - expected).norm().max(drift);
        if deviation <= DISPLACEMENT_TOL {
            return Ok(next);
        }
        prev = next;
        pad += PAD_STEP;
    }
    Err(Error::Truncation { s1: s.0, s2: s.1, pad, deviation })
}

type CacheKey = (i64, i64, u64, usize);

fn cache() -> &'static RwLock<HashMap<CacheKey, Arc<ComplexMatrix>>> {
    static CACHE: OnceLock<RwLock<HashMap<CacheKey, Arc<ComplexMatrix>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `M(n)` for an integer frequency, cached per `(n, B, Nw)`.
pub fn displacement_matrix(n: FreqVector, b: f64, nw: usize) -> Result<Arc<ComplexMatrix>> {
    let key = (n.n1, n.n2, b.to_bits(), nw);
    if let Some(m) = cache().read().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(Arc::clone(m));
    }
    let m = Arc::new(displacement_matrix_shift((n.n1 as f64, n.n2 as f64), b, nw)?);
    let mut w = cache().write().unwrap_or_else(|e| e.into_inner());
    Ok(Arc::clone(w.entry(key).or_insert(m)))
}

/// Dense `H̃_J(k)`. The `-n` blocks are the adjoints of the `n` blocks.
pub fn build_h_full(p: &FullParams, k: BlochMomentum, basis: &ProductBasis, dim_cap: usize) -> Result<HermitianMatrix> {
    let dim = basis.dim();
    if dim > dim_cap {
        return Err(Error::DimensionTooLarge { dim, cap: dim_cap });
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("empty product basis".into()));
    }
    let (b, nw) = (p.b, basis.nw);
    let pw = &basis.pw;
    let mean = p.v.coeff(FreqVector::new(0, 0)).re;
    let mut h = HermitianMatrix::zeros(dim);
    for (i, m) in pw.modes().enumerate() {
        let kinetic = (m.0 as f64 - k.k1).powi(2) + (m.1 as f64 - k.k2).powi(2) + mean;
        for a in 0..=nw {
            let r = basis.index(i, a);
            h[(r, r)] = Complex64::new(kinetic + p.j * a as f64, 0.0);
        }
    }
    for (n, vn) in p.v.iter().filter(|(n, _)| n.is_canonical()) {
        let disp = displacement_matrix(n, b, nw)?;
        for (col, m) in pw.modes().enumerate() {
            let Some(row) = pw.index((m.0 + n.n1, m.1 + n.n2)) else { continue };
            let x_phase = b * n.n1 as f64 * ((m.1 + n.n2) as f64 - k.k2);
            let coef = vn * Complex64::from_polar(1.0, x_phase);
            for a in 0..=nw {
                for c in 0..=nw {
                    let z = coef * disp[(a, c)];
                    let (ri, ci) = (basis.index(row, a), basis.index(col, c));
                    h[(ri, ci)] += z;
                    h[(ci, ri)] += z.conj();
                }
            }
        }
    }
    Ok(h)
}

/// Lowest `count` eigenvalues of `H̃_J(k)`.
pub fn full_bands(p: &FullParams, k: BlochMomentum, basis: &ProductBasis, count: usize, dim_cap: usize) -> Result<Vec<f64>> {
    let mut e = eigvalsh(&build_h_full(p, k, basis, dim_cap)?)?;
    e.truncate(count);
    Ok(e)
}

/// One CSV row: `J,band,E_full,E_eff,abs_diff`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JRow {
    pub j: f64,
    pub band: usize,
    pub e_full: f64,
    pub e_eff: f64,
    pub abs_diff: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitStatus {
    /// Log-log least-squares fit of `|E_full - E_eff|` against `J`.
    Fitted { slope: f64, intercept: f64 },
    /// Some difference fell below the noise floor; no exponent is reported.
    BelowNoise,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandFit {
    pub band: usize,
    pub status: FitStatus,
    /// `|E_full - E_eff|` shrinks every time `J` grows.
    pub monotone: bool,
}

#[derive(Clone, Debug)]
pub struct JStudy {
    pub rows: Vec<JRow>,
    pub fits: Vec<BandFit>,
}

/// Differences below this are indistinguishable from eigensolver noise.
pub const NOISE_FLOOR: f64 = 1e-12;

fn loglog_fit(js: &[f64], diffs: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = js.iter().map(|j| j.ln()).collect();
    let ys: Vec<f64> = diffs.iter().map(|d| d.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Compares `E_j(k, B, J)` with the effective `E_j(k, B)` for each `J` and
/// fits the decay exponent per band (1-based band indices).
pub fn j_convergence_study(
    v: &FourierPotential,
    b: f64,
    k: BlochMomentum,
    band_list: &[usize],
    j_values: &[f64],
    basis: &ProductBasis,
    dim_cap: usize,
) -> Result<JStudy> {
    let mut js: Vec<f64> = j_values.to_vec();
    js.sort_by(f64::total_cmp);
    js.dedup();
    if js.len() < 2 {
        return Err(Error::InvalidParameter("a J study needs at least two distinct J values".into()));
    }
    let top = band_list.iter().copied().max().unwrap_or(0);
    if band_list.is_empty() || band_list.contains(&0) || top > basis.pw.dim() {
        return Err(Error::InvalidParameter(format!("band indices {band_list:?} must be 1-based and within the basis")));
    }
    let eff = bands(&FullParams::new(v.clone(), b, 1.0)?.effective()?, k, &basis.pw, top)?;
    let full: Vec<Vec<f64>> = js
        .par_iter()
        .map(|&j| full_bands(&FullParams::new(v.clone(), b, j)?, k, basis, top, dim_cap))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &band in band_list {
        let diffs: Vec<f64> = full.iter().map(|e| (e[band - 1] - eff[band - 1]).abs()).collect();
        for (&j, e) in js.iter().zip(&full) {
            rows.push(JRow { j, band, e_full: e[band - 1], e_eff: eff[band - 1], abs_diff: (e[band - 1] - eff[band - 1]).abs() });
        }
        let status = if diffs.iter().any(|&d| d < NOISE_FLOOR) {
            FitStatus::BelowNoise
        } else {
            let (slope, intercept) = loglog_fit(&js, &diffs);
            FitStatus::Fitted { slope, intercept }
        };
        let monotone = diffs.windows(2).all(|w| w[1] < w[0]);
        fits.push(BandFit { band, status, monotone });
    }
    Ok(JStudy { rows, fits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_h_eff;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn displacement_examples() {
        let id = displacement_matrix(FreqVector::new(0, 0), 3.0, 6).unwrap();
        assert!(id.sub(&ComplexMatrix::identity(7)).max_abs() < 1e-14);
        let b = 2.7;
        let m = displacement_matrix(FreqVector::new(1, 0), b, 6).unwrap();
        assert!((m[(0, 0)] - c((-b / 4.0).exp(), 0.0)).norm() < 1e-9);
        let m = displacement_matrix(FreqVector::new(1, 1), 2.0, 6).unwrap();
        assert!((m[(0, 0)] - Complex64::from_polar((-1.0f64).exp(), -1.0)).norm() < 1e-9);
    }

    #[test]
    fn displacement_is_unitary_away_from_the_cutoff() {
        // columns of a displaced level a reach about (√a + |n|√(B/2))², so the
        // safe block shrinks as the shift grows
        for (b, nw, keep) in [(2.0, 40, 40 - DEFAULT_PAD), (2.0 * PI, 80, 40)] {
            for n in [FreqVector::new(1, 0), FreqVector::new(0, -1)] {
                let m = displacement_matrix(n, b, nw).unwrap();
                let g = m.adjoint().matmul(&m);
                let top = g.crop(keep, keep).sub(&ComplexMatrix::identity(keep));
                assert!(top.max_abs() < 1e-8, "{n:?} B={b}: {:e}", top.max_abs());
            }
        }
    }

    #[test]
    fn displacement_factorizes_in_order() {
        let (b, nw) = (2.0 * PI, 40);
        let keep = 12;
        let m1 = displacement_matrix(FreqVector::new(1, 0), b, nw).unwrap();
        let m2 = displacement_matrix(FreqVector::new(0, -1), b, nw).unwrap();
        let both = displacement_matrix(FreqVector::new(1, -1), b, nw).unwrap();
        let prod = m1.matmul(&m2);
        assert!(prod.crop(keep, keep).sub(&both.crop(keep, keep)).max_abs() < 1e-9);
    }

    #[test]
    fn free_model_spectrum_is_exact() {
        let pw = PlaneWaveBasis::new(2).unwrap();
        let basis = ProductBasis::new(pw, 3);
        let p = FullParams::new(FourierPotential::zero(), 2.0 * PI, 7.5).unwrap();
        let k = BlochMomentum::new(0.3, -0.2);
        let got = full_bands(&p, k, &basis, basis.dim(), DEFAULT_DIM_CAP).unwrap();
        let mut want: Vec<f64> = pw
            .modes()
            .flat_map(|m| {
                let kin = (m.0 as f64 - k.k1).powi(2) + (m.1 as f64 - k.k2).powi(2);
                (0..=3).map(move |a| kin + 7.5 * a as f64)
            })
            .collect();
        want.sort_by(f64::total_cmp);
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_state_projection_is_the_effective_model() {
        let pw = PlaneWaveBasis::new(3).unwrap();
        let b = 2.0 * PI;
        let v = FourierPotential::standard(0.3);
        let p = FullParams::new(v, b, 50.0).unwrap();
        let k = BlochMomentum::new(0.25, 0.4);
        let full = build_h_full(&p, k, &ProductBasis::new(pw, 0), DEFAULT_DIM_CAP).unwrap();
        let eff = build_h_eff(&p.effective().unwrap(), k, &pw).unwrap();
        let scale = eff.max_abs();
        for r in 0..pw.dim() {
            for cc in 0..pw.dim() {
                assert!((full[(r, cc)] - eff[(r, cc)]).norm() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn full_matrix_is_hermitian_and_capped() {
        let pw = PlaneWaveBasis::new(2).unwrap();
        let v = FourierPotential::from_coefficients([
            (FreqVector::new(1, 1), c(0.1, 0.05)),
            (FreqVector::new(0, 1), c(0.2, 0.0)),
            (FreqVector::new(2, -1), c(-0.03, 0.02)),
        ])
        .unwrap();
        let p = FullParams::new(v, 3.3, 20.0).unwrap();
        let h = build_h_full(&p, BlochMomentum::new(0.1, 0.7), &ProductBasis::new(pw, 5), DEFAULT_DIM_CAP).unwrap();
        assert!(h.hermitian_defect() <= 1e-10 * h.frobenius_norm());
        let err = build_h_full(&p, BlochMomentum::new(0.0, 0.0), &ProductBasis::new(pw, 5), 10);
        assert!(matches!(err, Err(Error::DimensionTooLarge { .. })));
        assert!((p.lambda() - (3.3f64 / 2.0).sqrt()).abs() < 1e-15);
        assert!(FullParams::new(FourierPotential::zero(), 1.0, 0.0).is_err());
    }

    #[test]
    fn small_study_decays_like_one_over_j() {
        let basis = ProductBasis::new(PlaneWaveBasis::new(3).unwrap(), 8);
        let study = j_convergence_study(
            &FourierPotential::standard(0.3),
            2.0 * PI,
            BlochMomentum::new(0.25, 0.4),
            &[1, 2],
            &[50.0, 100.0, 200.0, 400.0],
            &basis,
            DEFAULT_DIM_CAP,
        )
        .unwrap();
        assert_eq!(study.rows.len(), 8);
        for fit in &study.fits {
            assert!(fit.monotone);
            match fit.status {
                FitStatus::Fitted { slope, .. } => assert!((-1.15..=-0.85).contains(&slope), "slope {slope}"),
                FitStatus::BelowNoise => panic!("unexpected noise floor"),
            }
        }
    }

    #[test]
    fn free_study_sits_at_the_noise_floor() {
        let basis = ProductBasis::new(PlaneWaveBasis::new(2).unwrap(), 3);
        let study = j_convergence_study(
            &FourierPotential::zero(),
            2.0 * PI,
            BlochMomentum::new(0.25, 0.4),
            &[1],
            &[50.0, 100.0],
            &basis,
            DEFAULT_DIM_CAP,
        )
        .unwrap();
        assert!(study.rows.iter().all(|r| r.abs_diff < NOISE_FLOOR));
        assert_eq!(study.fits[0].status, FitStatus::BelowNoise);
    }
}
