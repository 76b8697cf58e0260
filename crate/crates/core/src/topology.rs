//! Chern numbers and Berry curvature of isolated band groups over the
//! Brillouin torus, by lattice link variables.
//!
//! Fibers at `k` and `k + p` (`p ∈ ℤ²`) are identified through multiplication
//! by `e^{i⟨x, p⟩}`, which on coefficients is the index shift of
//! [`sewing_shift`]. Links that leave the fundamental domain compare against
//! the shifted frame of the wrapped point.
//!
//! With `⟨u, v⟩` linear in the first slot the link `det ⟨u_i(k), u_j(k')⟩`
//! is `exp(-∫η)` to first order, so the counter-clockwise plaquette phase is
//! `B(k)·area` and `c₁ = Σ phases / 2π`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::full_model::displacement_matrix_shift;
use crate::hamiltonian::{build_h_eff, sewing_shift, BlochMomentum, EffectiveParams, PlaneWaveBasis};
use crate::linalg::{eigh_lowest, inner};

/// Default minimum gap isolating a band group.
pub const GAP_TOL: f64 = 1e-6;
/// Links with `|det| ` below this are treated as unresolved.
pub const SINGULAR_LINK_TOL: f64 = 1e-8;

/// Uniform grid `k_ab = (a/Ng, b/Ng)`, `a, b = 0..Ng-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KGrid {
    ng: usize,
}

impl KGrid {
    pub fn new(ng: usize) -> Result<Self> {
        if ng < 4 {
            return Err(Error::InvalidParameter(format!("k-grid needs Ng >= 4, got {ng}")));
        }
        Ok(Self { ng })
    }

    pub fn ng(&self) -> usize {
        self.ng
    }

    pub fn len(&self) -> usize {
        self.ng * self.ng
    }

    pub fn is_empty(&self) -> bool {
        self.ng == 0
    }

    pub fn point(&self, a: usize, b: usize) -> BlochMomentum {
        BlochMomentum::new(a as f64 / self.ng as f64, b as f64 / self.ng as f64)
    }

    /// Flat index `a·Ng + b`.
    pub fn flat(&self, a: usize, b: usize) -> usize {
        a * self.ng + b
    }
}

/// Eigenframes of a contiguous band group `lo..=hi` (1-based) on a grid.
#[derive(Clone, Debug)]
pub struct BandFrames {
    pub grid: KGrid,
    pub basis: PlaneWaveBasis,
    pub band_set: (usize, usize),
    /// `frames[flat][i]` is the eigenvector of band `lo + i`.
    pub frames: Vec<Vec<Vec<Complex64>>>,
    /// Smallest gap to the bands just below and above the group at each point.
    pub gaps: Vec<f64>,
}

impl BandFrames {
    pub fn compute(
        p: &EffectiveParams,
        band_set: (usize, usize),
        grid: KGrid,
        basis: &PlaneWaveBasis,
    ) -> Result<Self> {
        Ok(Self::compute_sets(p, &[band_set], grid, basis)?.remove(0))
    }

    /// Frames for several band groups from one eigensolve per k-point.
    pub fn compute_sets(
        p: &EffectiveParams,
        band_sets: &[(usize, usize)],
        grid: KGrid,
        basis: &PlaneWaveBasis,
    ) -> Result<Vec<Self>> {
        for &(lo, hi) in band_sets {
            if lo < 1 || hi < lo || hi + 1 > basis.dim() {
                return Err(Error::InvalidParameter(format!(
                    "band set {lo}..={hi} is not a contiguous 1-based range below the basis size {}",
                    basis.dim()
                )));
            }
        }
        let top = band_sets.iter().map(|s| s.1).max().ok_or_else(|| Error::InvalidParameter("no band sets".into()))?;
        let ng = grid.ng();
        let results: Vec<Result<Vec<(Vec<Vec<Complex64>>, f64)>>> = (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let k = grid.point(flat / ng, flat % ng);
                let es = eigh_lowest(&build_h_eff(p, k, basis)?, top + 1)?;
                Ok(band_sets
                    .iter()
                    .map(|&(lo, hi)| {
                        let above = es.values[hi] - es.values[hi - 1];
                        let below = if lo > 1 { es.values[lo - 1] - es.values[lo - 2] } else { f64::INFINITY };
                        (es.vectors[lo - 1..hi].to_vec(), above.min(below))
                    })
                    .collect())
            })
            .collect();
        let mut out: Vec<Self> = band_sets
            .iter()
            .map(|&band_set| Self {
                grid,
                basis: *basis,
                band_set,
                frames: Vec::with_capacity(grid.len()),
                gaps: Vec::with_capacity(grid.len()),
            })
            .collect();
        for r in results {
            for (set, (f, g)) in out.iter_mut().zip(r?) {
                set.frames.push(f);
                set.gaps.push(g);
            }
        }
        Ok(out)
    }

    /// Frames on the coarser grid `Ng / factor`, reusing the shared points.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        let ng = self.grid.ng();
        if factor == 0 || ng % factor != 0 {
            return Err(Error::InvalidParameter(format!("cannot subsample Ng = {ng} by {factor}")));
        }
        let grid = KGrid::new(ng / factor)?;
        let pick = |a: usize, b: usize| self.grid.flat(a * factor, b * factor);
        let mut frames = Vec::with_capacity(grid.len());
        let mut gaps = Vec::with_capacity(grid.len());
        for a in 0..grid.ng() {
            for b in 0..grid.ng() {
                frames.push(self.frames[pick(a, b)].clone());
                gaps.push(self.gaps[pick(a, b)]);
            }
        }
        Ok(Self { grid, basis: self.basis, band_set: self.band_set, frames, gaps })
    }
}

#[derive(Clone, Debug)]
pub struct ChernReport {
    pub chern: i64,
    /// `Σ phases / 2π` before rounding.
    pub raw: f64,
    /// Plaquette phases in `(-π, π]`, flat index `a·Ng + b` for the plaquette with corner `k_ab`.
    pub plaquette_phases: Vec<f64>,
    pub ng: usize,
    pub min_gap: f64,
    pub band_set: (usize, usize),
    pub valid: bool,
    /// Largest fraction of a frame's norm lost when sewing across the boundary.
    pub max_sewing_loss: f64,
}

fn det(m: &[Vec<Complex64>]) -> Complex64 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        n => {
            // Gaussian elimination with partial pivoting
            let mut a: Vec<Vec<Complex64>> = m.to_vec();
            let mut d = Complex64::new(1.0, 0.0);
            for c in 0..n {
                let piv = (c..n).max_by(|&i, &j| a[i][c].norm().total_cmp(&a[j][c].norm())).unwrap_or(c);
                if a[piv][c].norm() == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                if piv != c {
                    a.swap(piv, c);
                    d = -d;
                }
                d *= a[c][c];
                for r in c + 1..n {
                    let f = a[r][c] / a[c][c];
                    for cc in c..n {
                        let t = a[c][cc];
                        a[r][cc] -= f * t;
                    }
                }
            }
            d
        }
    }
}

/// Unit link `det M / |det M|` with `M_ij = ⟨u_i, v_j⟩`.
fn link(u: &[Vec<Complex64>], v: &[Vec<Complex64>]) -> Result<Complex64> {
    let m: Vec<Vec<Complex64>> = u.iter().map(|ui| v.iter().map(|vj| inner(ui, vj)).collect()).collect();
    let d = det(&m);
    let mag = d.norm();
    if mag < SINGULAR_LINK_TOL {
        return Err(Error::SingularLink { det: mag });
    }
    Ok(d / mag)
}

/// Link-variable Chern number of precomputed frames.
///
/// Phase conventions of the individual eigenvectors do not matter.
pub fn chern_from_frames(frames: &BandFrames, gap_tol: f64) -> Result<ChernReport> {
    let grid = frames.grid;
    let ng = grid.ng();
    let basis = &frames.basis;
    let mut max_loss: f64 = 0.0;
    let mut sewn = |a: usize, b: usize| -> Vec<Vec<Complex64>> {
        let wrap = ((a / ng) as i64, (b / ng) as i64);
        let base = &frames.frames[grid.flat(a % ng, b % ng)];
        if wrap == (0, 0) {
            return base.clone();
        }
        base.iter()
            .map(|v| {
                let (w, lost) = sewing_shift(v, wrap, basis);
                max_loss = max_loss.max(lost);
                w
            })
            .collect()
    };
    let mut ux = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut uy = vec![Complex64::new(0.0, 0.0); grid.len()];
    for a in 0..ng {
        for b in 0..ng {
            let here = &frames.frames[grid.flat(a, b)];
            ux[grid.flat(a, b)] = link(here, &sewn(a + 1, b))?;
            uy[grid.flat(a, b)] = link(here, &sewn(a, b + 1))?;
        }
    }
    let mut phases = Vec::with_capacity(grid.len());
    let mut total = 0.0;
    for a in 0..ng {
        for b in 0..ng {
            let (a1, b1) = ((a + 1) % ng, (b + 1) % ng);
            let loop_product =
                ux[grid.flat(a, b)] * uy[grid.flat(a1, b)] * ux[grid.flat(a, b1)].conj() * uy[grid.flat(a, b)].conj();
            let mut f = loop_product.arg();
            if f <= -PI {
                f += 2.0 * PI;
            }
            total += f;
            phases.push(f);
        }
    }
    let raw = total / (2.0 * PI);
    let min_gap = frames.gaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ChernReport {
        chern: raw.round() as i64,
        raw,
        plaquette_phases: phases,
        ng,
        min_gap,
        band_set: frames.band_set,
        valid: min_gap > gap_tol,
        max_sewing_loss: max_loss,
    })
}

/// Chern number of the band group `band_set` (1-based, inclusive).
pub fn chern_number(
    p: &EffectiveParams,
    band_set: (usize, usize),
    grid: KGrid,
    basis: &PlaneWaveBasis,
) -> Result<ChernReport> {
    chern_from_frames(&BandFrames::compute(p, band_set, grid, basis)?, GAP_TOL)
}

/// Berry curvature per unit area on plaquette centers.
#[derive(Clone, Debug)]
pub struct CurvatureMap {
    pub ng: usize,
    /// `(k₁, k₂)` of each plaquette center, flat index `a·Ng + b`.
    pub centers: Vec<(f64, f64)>,
    /// `B(k)`: plaquette phase divided by the plaquette area `1/Ng²`.
    pub values: Vec<f64>,
    pub report: ChernReport,
}

impl CurvatureMap {
    pub fn from_report(report: ChernReport) -> Self {
        let ng = report.ng;
        let area_inv = (ng * ng) as f64;
        let centers = (0..ng * ng)
            .map(|i| (((i / ng) as f64 + 0.5) / ng as f64, ((i % ng) as f64 + 0.5) / ng as f64))
            .collect();
        let values = report.plaquette_phases.iter().map(|f| f * area_inv).collect();
        Self { ng, centers, values, report }
    }

    /// `∫ B(k) dk` over the torus.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() / (self.ng * self.ng) as f64
    }

    /// Fraction of `∫|B|` carried by plaquettes whose center lies within
    /// `width` of a line `k₁ ≡ offset` or `k₂ ≡ offset` (mod 1).
    pub fn mass_fraction_near_lines(&self, offset: f64, width: f64) -> f64 {
        let dist = |x: f64| {
            let t = (x - offset).rem_euclid(1.0);
            t.min(1.0 - t)
        };
        let total: f64 = self.values.iter().map(|v| v.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let near: f64 = self
            .centers
            .iter()
            .zip(&self.values)
            .filter(|((k1, k2), _)| dist(*k1) <= width || dist(*k2) <= width)
            .map(|(_, v)| v.abs())
            .sum();
        near / total
    }
}

/// Curvature map of a single isolated band.
pub fn berry_curvature_map(
    p: &EffectiveParams,
    band: usize,
    grid: KGrid,
    basis: &PlaneWaveBasis,
) -> Result<CurvatureMap> {
    let report = chern_number(p, (band, band), grid, basis)?;
    if !report.valid {
        return Err(Error::GapClosed { band, min_gap: report.min_gap, tolerance: GAP_TOL });
    }
    Ok(CurvatureMap::from_report(report))
}

/// Closed form `exp(-B/4 (|k - k'|² - 2iσ(k, k')))`, `σ = k₁'k₂ - k₁k₂'`.
pub fn parent_overlap_closed_form(b: f64, k: BlochMomentum, kp: BlochMomentum) -> Complex64 {
    let d2 = (k.k1 - kp.k1).powi(2) + (k.k2 - kp.k2).powi(2);
    let sigma = kp.k1 * k.k2 - k.k1 * kp.k2;
    (Complex64::new(-b / 4.0 * d2, b / 2.0 * sigma)).exp()
}

#[derive(Clone, Copy, Debug)]
pub struct ParentOverlap {
    pub numerical: Complex64,
    pub closed_form: Complex64,
    pub deviation: f64,
}

/// Tolerance of the parent-state overlap check.
pub const PARENT_OVERLAP_TOL: f64 = 1e-8;

/// `⟨Φ₀(k), Φ₀(k')⟩` from Hermite-basis displacement matrices, compared to the closed form.
///
/// `Φ₀(k) = (2π)⁻¹ e^{iBk₁k₂/2} e^{-i√B k₁ w} ψ₀(w - √B k₂)`.
pub fn parent_overlap_check(b: f64, k: BlochMomentum, kp: BlochMomentum, nw: usize) -> Result<ParentOverlap> {
    if nw < 40 {
        return Err(Error::InvalidParameter(format!("parent overlap needs Nw >= 40, got {nw}")));
    }
    let m = displacement_matrix_shift((k.k1, k.k2), b, nw)?;
    let mp = displacement_matrix_shift((kp.k1, kp.k2), b, nw)?;
    let sum: Complex64 = (0..=nw).map(|a| m[(a, 0)] * mp[(a, 0)].conj()).sum();
    let numerical = sum * Complex64::from_polar(1.0, b * (k.k1 * k.k2 - kp.k1 * kp.k2) / 2.0);
    let closed_form = parent_overlap_closed_form(b, k, kp);
    let deviation = (numerical - closed_form).norm();
    if deviation > PARENT_OVERLAP_TOL {
        return Err(Error::ToleranceExceeded { what: "parent overlap".into(), deviation, tolerance: PARENT_OVERLAP_TOL });
    }
    Ok(ParentOverlap { numerical, closed_form, deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::FourierPotential;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(n: i64) -> PlaneWaveBasis {
        PlaneWaveBasis::new(n).unwrap()
    }

    #[test]
    fn grid_rejects_coarse() {
        assert!(KGrid::new(3).is_err());
        let g = KGrid::new(4).unwrap();
        assert_eq!(g.point(2, 1), BlochMomentum::new(0.5, 0.25));
    }

    #[test]
    fn first_band_at_one_flux_quantum() {
        let p = EffectiveParams::from_gamma(0.05, 2.0 * PI, 0.0).unwrap();
        let r = chern_number(&p, (1, 1), KGrid::new(12).unwrap(), &basis(4)).unwrap();
        assert!(r.valid);
        assert_eq!(r.chern, 1);
        assert!((r.raw - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_field_is_trivial() {
        let p = EffectiveParams::from_gamma(0.05, 0.0, 0.0).unwrap();
        let r = chern_number(&p, (1, 1), KGrid::new(8).unwrap(), &basis(3)).unwrap();
        assert!(r.valid);
        assert_eq!(r.chern, 0);
    }

    #[test]
    fn gauge_randomized_frames_give_the_same_phases() {
        let p = EffectiveParams::from_gamma(0.1, 2.0 * PI, 0.5).unwrap();
        let frames = BandFrames::compute(&p, (2, 3), KGrid::new(8).unwrap(), &basis(3)).unwrap();
        let before = chern_from_frames(&frames, GAP_TOL).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut scrambled = frames.clone();
        for frame in &mut scrambled.frames {
            for v in frame.iter_mut() {
                let z = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
                v.iter_mut().for_each(|c| *c *= z);
            }
        }
        let after = chern_from_frames(&scrambled, GAP_TOL).unwrap();
        assert_eq!(before.chern, after.chern);
        for (x, y) in before.plaquette_phases.iter().zip(&after.plaquette_phases) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn subsampled_frames_match_a_direct_coarse_run() {
        let p = EffectiveParams::from_gamma(0.05, 2.0 * PI, 0.0).unwrap();
        let fine = BandFrames::compute(&p, (1, 1), KGrid::new(12).unwrap(), &basis(3)).unwrap();
        let coarse = BandFrames::compute(&p, (1, 1), KGrid::new(6).unwrap(), &basis(3)).unwrap();
        let a = chern_from_frames(&fine.subsample(2).unwrap(), GAP_TOL).unwrap();
        let b = chern_from_frames(&coarse, GAP_TOL).unwrap();
        for (x, y) in a.plaquette_phases.iter().zip(&b.plaquette_phases) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn free_bands_are_not_isolated() {
        let p = EffectiveParams::new(FourierPotential::zero(), 2.0 * PI, 0.5).unwrap();
        let err = berry_curvature_map(&p, 1, KGrid::new(8).unwrap(), &basis(2));
        assert!(err.is_err());
    }

    #[test]
    fn curvature_integrates_to_the_chern_number() {
        let p = EffectiveParams::from_gamma(0.1, 2.0 * PI, 0.5).unwrap();
        let map = berry_curvature_map(&p, 1, KGrid::new(10).unwrap(), &basis(3)).unwrap();
        assert!((map.integral() - 2.0 * PI).abs() < 1e-9);
        let f = map.mass_fraction_near_lines(0.0, 0.5);
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn parent_overlap_examples() {
        let b = 2.0 * PI;
        let k0 = BlochMomentum::new(0.0, 0.0);
        let r = parent_overlap_check(b, k0, k0, 40).unwrap();
        assert!((r.numerical - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let r = parent_overlap_check(b, k0, BlochMomentum::new(1.0, 0.0), 40).unwrap();
        assert!((r.closed_form - Complex64::new((-PI / 2.0).exp(), 0.0)).norm() < 1e-15);
        let r = parent_overlap_check(b, BlochMomentum::new(1.0, 0.0), BlochMomentum::new(0.0, 1.0), 40).unwrap();
        assert!((r.closed_form - Complex64::new(-(-PI).exp(), 0.0)).norm() < 1e-15);
        assert!(parent_overlap_check(b, k0, k0, 20).is_err());
    }
}
