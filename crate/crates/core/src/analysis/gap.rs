use rayon::prelude::*;

use super::K0;
use crate::error::{Error, Result};
use crate::hamiltonian::{bands, BlochMomentum, EffectiveParams, PlaneWaveBasis};

/// Leading-order gap `|V₀| e^{-B/4} | |cos(B/4)| - |sin(B/4)| |`.
pub fn perturbative_gap(v0: f64, b: f64) -> f64 {
    let q = b / 4.0;
    v0.abs() * (-q).exp() * (q.cos().abs() - q.sin().abs()).abs()
}

/// `E₂(k) - E₁(k)`.
pub fn gap_at(p: &EffectiveParams, k: BlochMomentum, basis: &PlaneWaveBasis) -> Result<f64> {
    let e = bands(p, k, basis, 2)?;
    Ok(e[1] - e[0])
}

/// Coarse grid followed by shrinking pattern-search refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapSearch {
    pub coarse: usize,
    pub refine_steps: usize,
    pub shrink: f64,
}

impl Default for GapSearch {
    fn default() -> Self {
        Self { coarse: 16, refine_steps: 5, shrink: 4.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapMinimum {
    pub gap: f64,
    pub k: BlochMomentum,
    /// Step of the last refinement round.
    pub resolution: f64,
}

/// `min_k E₂(k) - E₁(k)` over the Brillouin torus.
pub fn minimize_gap(p: &EffectiveParams, basis: &PlaneWaveBasis, search: GapSearch) -> Result<GapMinimum> {
    if search.coarse < 1 || search.shrink <= 1.0 {
        return Err(Error::InvalidParameter("gap search needs a nonempty grid and shrink factor > 1".into()));
    }
    let ng = search.coarse;
    let mut best = GapMinimum { gap: f64::INFINITY, k: K0, resolution: 1.0 / ng as f64 };
    for a in 0..ng {
        for b in 0..ng {
            let k = BlochMomentum::new(a as f64 / ng as f64, b as f64 / ng as f64);
            let g = gap_at(p, k, basis)?;
            if g < best.gap {
                best.gap = g;
                best.k = k;
            }
        }
    }
    let mut step = best.resolution;
    for _ in 0..search.refine_steps {
        step /= search.shrink;
        // walk the 8-neighbour stencil until no neighbour improves, at most a
        // few cells, since the coarse box was one cell wide
        for _ in 0..(2.0 * search.shrink) as usize {
            let mut moved = false;
            for (da, db) in [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)] {
                let k = BlochMomentum::new(best.k.k1 + da as f64 * step, best.k.k2 + db as f64 * step);
                let g = gap_at(p, k, basis)?;
                if g < best.gap {
                    best.gap = g;
                    best.k = k;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        best.resolution = step;
    }
    let (reduced, _) = best.k.reduce();
    best.k = reduced;
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct GapScan {
    pub b_values: Vec<f64>,
    pub g_numeric: Vec<f64>,
    pub g_perturbative: Vec<f64>,
    pub k_argmin: Vec<BlochMomentum>,
}

/// Numerical gap of the standard potential for each `B`, next to the perturbative formula.
pub fn gap_scan(v0: f64, b_values: &[f64], search: GapSearch, basis: &PlaneWaveBasis) -> Result<GapScan> {
    let minima: Vec<GapMinimum> = b_values
        .par_iter()
        .map(|&b| minimize_gap(&EffectiveParams::standard(v0, b, 0.0)?, basis, search))
        .collect::<Result<_>>()?;
    Ok(GapScan {
        b_values: b_values.to_vec(),
        g_numeric: minima.iter().map(|m| m.gap).collect(),
        g_perturbative: b_values.iter().map(|&b| perturbative_gap(v0, b)).collect(),
        k_argmin: minima.iter().map(|m| m.k).collect(),
    })
}

/// Predicted lowest four levels at `k₀`, sorted: `1/2 ± γcos(B/4)`, `1/2 ± γsin(B/4)`.
pub fn four_level_prediction(gamma: f64, b: f64) -> [f64; 4] {
    let (c, s) = (gamma * (b / 4.0).cos(), gamma * (b / 4.0).sin());
    let mut v = [0.5 + c, 0.5 - c, 0.5 + s, 0.5 - s];
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourLevelReport {
    pub gamma: f64,
    pub predicted: [f64; 4],
    pub numeric: [f64; 4],
    pub max_deviation: f64,
}

/// Largest gap between the four lowest levels at `k₀` and the four-level prediction.
pub fn four_level_check(v0: f64, b: f64, basis: &PlaneWaveBasis) -> Result<FourLevelReport> {
    let gamma = v0 * (-b / 4.0).exp();
    if gamma.abs() > 0.1 {
        return Err(Error::InvalidParameter(format!("four-level regime needs |γ| <= 0.1, got {gamma}")));
    }
    let e = bands(&EffectiveParams::standard(v0, b, 0.0)?, K0, basis, 4)?;
    let numeric = [e[0], e[1], e[2], e[3]];
    let predicted = four_level_prediction(gamma, b);
    let max_deviation = numeric.iter().zip(&predicted).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(FourLevelReport { gamma, predicted, numeric, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn basis(n: i64) -> PlaneWaveBasis {
        PlaneWaveBasis::new(n).unwrap()
    }

    #[test]
    fn perturbative_examples() {
        assert!((perturbative_gap(1.0, 2.0 * PI) - (-PI / 2.0).exp()).abs() < 1e-15);
        assert!((perturbative_gap(1.0, 2.0 * PI) - 0.20788).abs() < 1e-5);
        for l in 0..4 {
            assert!(perturbative_gap(0.7, (2 * l + 1) as f64 * PI) < 1e-15);
        }
        assert!((perturbative_gap(1.0, 4.0 * PI) - 0.04322).abs() < 1e-5);
        assert_eq!(perturbative_gap(-1.0, 1.0), perturbative_gap(1.0, 1.0));
    }

    #[test]
    fn scan_examples() {
        let pw = basis(4);
        let v0 = 0.1;
        let scan = gap_scan(v0, &[2.0 * PI, 3.0 * PI], GapSearch::default(), &pw).unwrap();
        let gamma = v0 * (-PI / 2.0f64).exp();
        assert!((scan.g_numeric[0] - scan.g_perturbative[0]).abs() <= 5.0 * gamma * gamma);
        assert!(scan.g_numeric[1] <= 1e-8);
        assert!(scan.g_numeric.iter().all(|g| *g >= -1e-10));
        // at B = 2π the lowest pair splits only along k₂, so the minimizer is a line
        let p = EffectiveParams::standard(v0, 2.0 * PI, 0.0).unwrap();
        assert!(gap_at(&p, K0, &pw).unwrap() - scan.g_numeric[0] <= 1e-12);
        let k = scan.k_argmin[1];
        assert!((k.k1 - 0.5).abs() < 1e-6 && (k.k2 - 0.5).abs() < 1e-6);
        let free = gap_scan(0.0, &[1.0, 5.0], GapSearch::default(), &pw).unwrap();
        assert!(free.g_numeric.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn rescaled_gap_is_nearly_pi_periodic_in_quarter_field() {
        let pw = basis(4);
        let v0 = 0.05;
        let search = GapSearch { coarse: 8, refine_steps: 3, shrink: 4.0 };
        for b in [1.0, 2.5, 4.0] {
            let scan = gap_scan(v0, &[b, b + 4.0 * PI], search, &pw).unwrap();
            let r0 = (b / 4.0).exp() * scan.g_numeric[0] / v0;
            let r1 = ((b + 4.0 * PI) / 4.0).exp() * scan.g_numeric[1] / v0;
            let gamma = v0 * (-b / 4.0f64).exp();
            assert!((r0 - r1).abs() <= 10.0 * gamma, "B={b}: {r0} vs {r1}");
        }
    }

    #[test]
    fn four_level_examples() {
        let pw = basis(5);
        let gamma = 0.05;
        let b = 2.0 * PI;
        let r = four_level_check(gamma * (b / 4.0).exp(), b, &pw).unwrap();
        assert!(r.max_deviation <= 5.0 * gamma * gamma);
        let b = 3.0 * PI;
        let pred = four_level_prediction(gamma, b);
        let d = gamma / 2f64.sqrt();
        for (x, y) in pred.iter().zip(&[0.5 - d, 0.5 - d, 0.5 + d, 0.5 + d]) {
            assert!((x - y).abs() < 1e-15);
        }
        let r = four_level_check(0.0, 1.0, &pw).unwrap();
        assert!(r.numeric.iter().all(|e| (e - 0.5).abs() < 1e-15));
        assert!(four_level_check(1.0, 0.0, &pw).is_err());
    }
}
