use super::K0;
use crate::error::{Error, Result};
use crate::hamiltonian::{bands, BlochMomentum, EffectiveParams, PlaneWaveBasis};

pub const DEFAULT_RADII: [f64; 3] = [1e-3, 2e-3, 4e-3];

/// Degeneracy of the pair at `k₀` required before fitting.
const DEGENERACY_TOL: f64 = 1e-9;
/// Relative regression residual above which a warning is attached.
const NONLINEAR_WARN: f64 = 0.05;

/// Unit vectors at 0°, 45°, 90° and 135°.
pub fn default_directions() -> Vec<[f64; 2]> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![[1.0, 0.0], [h, h], [0.0, 1.0], [-h, h]]
}

/// Cone `(E_upper - E_lower)/2 ≈ ⟨A κ, κ⟩^{1/2}` around `k₀`.
#[derive(Clone, Debug)]
pub struct ConeFit {
    pub e0: f64,
    /// One-based band labels.
    pub pair: (usize, usize),
    pub directional_slopes: Vec<([f64; 2], f64)>,
    pub quadratic_form: [[f64; 2]; 2],
    pub warnings: Vec<String>,
}

impl ConeFit {
    pub fn slope_along(&self, d: [f64; 2]) -> Option<f64> {
        self.directional_slopes
            .iter()
            .find(|(e, _)| (e[0] - d[0]).abs() < 1e-12 && (e[1] - d[1]).abs() < 1e-12)
            .map(|(_, s)| *s)
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let [[a, b], [_, d]] = self.quadratic_form;
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - r, mean + r]
    }

    pub fn positive_definite(&self) -> bool {
        self.eigenvalues()[0] > 0.0
    }
}

/// Fit the cone of the adjacent pair `(lower, lower + 1)` (one-based) at `k₀`.
pub fn dirac_fit(
    p: &EffectiveParams,
    pair: (usize, usize),
    radii: &[f64],
    directions: &[[f64; 2]],
    basis: &PlaneWaveBasis,
) -> Result<ConeFit> {
    let (lo, hi) = pair;
    if lo == 0 || hi != lo + 1 {
        return Err(Error::InvalidParameter(format!("pair must be adjacent one-based bands, got {pair:?}")));
    }
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    if directions.len() < 3 {
        return Err(Error::InvalidParameter("at least three directions are needed to fit A".into()));
    }
    let e = bands(p, K0, basis, hi)?;
    let (lower, upper) = (e[lo - 1], e[hi - 1]);
    if upper - lower > DEGENERACY_TOL {
        return Err(Error::NoDegeneracy { lower: lo, upper: hi, splitting: upper - lower });
    }
    let mut warnings = Vec::new();
    let mut slopes = Vec::with_capacity(directions.len());
    for &d in directions {
        let len = d[0].hypot(d[1]);
        let d = [d[0] / len, d[1] / len];
        let half: Vec<f64> = radii
            .iter()
            .map(|&r| {
                let k = BlochMomentum::new(K0.k1 + r * d[0], K0.k2 + r * d[1]);
                bands(p, k, basis, hi).map(|e| 0.5 * (e[hi - 1] - e[lo - 1]))
            })
            .collect::<Result<_>>()?;
        let rr: f64 = radii.iter().map(|r| r * r).sum();
        let s = radii.iter().zip(&half).map(|(r, h)| r * h).sum::<f64>() / rr;
        let resid = radii.iter().zip(&half).map(|(r, h)| (h - s * r).powi(2)).sum::<f64>().sqrt();
        let scale = s.abs() * rr.sqrt();
        if scale > 0.0 && resid / scale > NONLINEAR_WARN {
            warnings.push(format!(
                "direction ({:.3}, {:.3}): relative residual {:.2e}, consider smaller radii",
                d[0],
                d[1],
                resid / scale
            ));
        }
        slopes.push((d, s.max(0.0)));
    }
    Ok(ConeFit { e0: 0.5 * (lower + upper), pair, quadratic_form: fit_form(&slopes), directional_slopes: slopes, warnings })
}

/// Least squares for `s(d)² = a d₁² + 2b d₁d₂ + c d₂²`.
fn fit_form(slopes: &[([f64; 2], f64)]) -> [[f64; 2]; 2] {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (d, s) in slopes {
        let row = [d[0] * d[0], 2.0 * d[0] * d[1], d[1] * d[1]];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * s * s;
        }
    }
    let x = solve3(ata, atb);
    [[x[0], x[1]], [x[1], x[2]]]
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let tail: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r][r];
    }
    x
}
