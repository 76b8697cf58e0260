//! Hermitian eigensolver: Householder reduction to a real symmetric
//! tridiagonal matrix, implicit-shift QL on the tridiagonal, and inverse
//! iteration when only the lowest few eigenvectors are wanted.
//!
//! The reduction follows the unblocked LAPACK `zhetd2` scheme (lower storage).
//! Each reflector `I - tau v v*` is chosen so the subdiagonal it produces is
//! real, so no separate phase-absorption pass is needed. The working copy is
//! kept as separate real and imaginary planes so the rank-2 updates vectorize.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, HermitianMatrix};
use crate::error::{Error, Result};

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 60;

/// Ascending eigenvalues with orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// `vectors[j]` is the eigenvector belonging to `values[j]`.
    pub vectors: Vec<Vec<Complex64>>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvectors as the columns of a matrix.
    pub fn vector_matrix(&self) -> ComplexMatrix {
        let n = self.vectors.first().map_or(0, Vec::len);
        ComplexMatrix::from_fn(n, self.vectors.len(), |r, c| self.vectors[c][r])
    }
}

/// Real symmetric tridiagonal matrix plus the reflectors that produced it.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `offdiag[i]` couples rows `i` and `i + 1`.
    pub offdiag: Vec<f64>,
    reflectors: Vec<Reflector>,
}

#[derive(Clone, Debug)]
struct Reflector {
    /// First index the reflector acts on; `v[0]` is the implicit unit entry.
    start: usize,
    tau: Complex64,
    v: Vec<Complex64>,
}

impl Tridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Maps an eigenvector of the tridiagonal back to the original basis.
    pub fn back_transform(&self, z: &[f64]) -> Vec<Complex64> {
        let mut y: Vec<Complex64> = z.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        for r in self.reflectors.iter().rev() {
            let tail = &mut y[r.start..];
            let dot: Complex64 = r.v.iter().zip(tail.iter()).map(|(v, y)| v.conj() * y).sum();
            let f = r.tau * dot;
            for (yi, vi) in tail.iter_mut().zip(&r.v) {
                *yi -= f * vi;
            }
        }
        y
    }
}

/// Householder reduction `A = Q T Q*` with `T` real symmetric tridiagonal.
pub fn tridiagonalize(h: &HermitianMatrix) -> Tridiagonal {
    let n = h.dim();
    // Lower triangle is authoritative from here on.
    let mut re = vec![0.0; n * n];
    let mut im = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..=r {
            let z = h[(r, c)];
            re[r * n + c] = z.re;
            im[r * n + c] = z.im;
        }
    }

    let mut diag = vec![0.0; n];
    let mut offdiag = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));

    let mut v_re = vec![0.0; n];
    let mut v_im = vec![0.0; n];
    let mut y_re = vec![0.0; n];
    let mut y_im = vec![0.0; n];

    for k in 0..n.saturating_sub(1) {
        let s = k + 1;
        let m = n - s;
        let alpha = Complex64::new(re[s * n + k], im[s * n + k]);
        let xnorm_sq: f64 = (s + 1..n).map(|r| re[r * n + k].powi(2) + im[r * n + k].powi(2)).sum();

        if xnorm_sq == 0.0 && alpha.im == 0.0 {
            offdiag[k] = alpha.re;
            diag[k] = re[k * n + k];
            continue;
        }
        let beta = -alpha.re.signum() * (alpha.norm_sqr() + xnorm_sq).sqrt();
        let tau = Complex64::new((beta - alpha.re) / beta, -alpha.im / beta);
        let scale = Complex64::new(1.0, 0.0) / (alpha - beta);

        v_re[0] = 1.0;
        v_im[0] = 0.0;
        for (j, r) in (s + 1..n).enumerate() {
            let x = Complex64::new(re[r * n + k], im[r * n + k]) * scale;
            v_re[j + 1] = x.re;
            v_im[j + 1] = x.im;
        }
        offdiag[k] = beta;
        diag[k] = re[k * n + k];

        // y = tau * A22 v with A22 Hermitian, lower triangle stored.
        y_re[..m].fill(0.0);
        y_im[..m].fill(0.0);
        for i in 0..m {
            let row = (s + i) * n + s;
            let a_re = &re[row..row + i];
            let a_im = &im[row..row + i];
            let (vr, vi) = (v_re[i], v_im[i]);
            // strictly lower part of row i contributes to y_i (A v) and to y_j (A* v)
            let mut acc_re = 0.0;
            let mut acc_im = 0.0;
            {
                let (yr, yi) = (&mut y_re[..i], &mut y_im[..i]);
                for j in 0..i {
                    let (ar, ai) = (a_re[j], a_im[j]);
                    acc_re += ar * v_re[j] - ai * v_im[j];
                    acc_im += ar * v_im[j] + ai * v_re[j];
                    yr[j] += ar * vr + ai * vi;
                    yi[j] += ar * vi - ai * vr;
                }
            }
            let d = re[row + i];
            y_re[i] += acc_re + d * vr;
            y_im[i] += acc_im + d * vi;
        }
        for i in 0..m {
            let y = tau * Complex64::new(y_re[i], y_im[i]);
            y_re[i] = y.re;
            y_im[i] = y.im;
        }
        // w = y - (tau/2) (y* v) v
        let yv: Complex64 = (0..m)
            .map(|i| Complex64::new(y_re[i], -y_im[i]) * Complex64::new(v_re[i], v_im[i]))
            .sum();
        let a = -0.5 * tau * yv;
        for i in 0..m {
            let w = Complex64::new(y_re[i], y_im[i]) + a * Complex64::new(v_re[i], v_im[i]);
            y_re[i] = w.re;
            y_im[i] = w.im;
        }
        // A22 -= v w* + w v* (lower triangle)
        for i in 0..m {
            let row = (s + i) * n + s;
            let (vr, vi, wr, wi) = (v_re[i], v_im[i], y_re[i], y_im[i]);
            let a_re = &mut re[row..=row + i];
            let a_im = &mut im[row..=row + i];
            let (vre, vim, wre, wim) = (&v_re[..=i], &v_im[..=i], &y_re[..=i], &y_im[..=i]);
            for j in 0..=i {
                a_re[j] -= vr * wre[j] + vi * wim[j] + wr * vre[j] + wi * vim[j];
                a_im[j] -= vi * wre[j] - vr * wim[j] + wi * vre[j] - wr * vim[j];
            }
        }
        reflectors.push(Reflector {
            start: s,
            tau,
            v: (0..m).map(|i| Complex64::new(v_re[i], v_im[i])).collect(),
        });
    }
    if n > 0 {
        diag[n - 1] = re[(n - 1) * n + (n - 1)];
    }
    Tridiagonal { diag, offdiag, reflectors }
}

/// Implicit-shift QL on a symmetric tridiagonal (EISPACK `tql2` lineage).
///
/// When `vectors` is given it must hold `n` vectors of length `n`, initially
/// the identity; on exit `vectors[j]` belongs to the (unsorted) eigenvalue `d[j]`.
fn tql2(d: &mut [f64], offdiag: &[f64], mut vectors: Option<&mut [Vec<f64>]>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(offdiag);

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_QL_SWEEPS {
                    return Err(Error::NoConvergence { iterations: MAX_QL_SWEEPS });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = vectors.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut(i + 1);
                        let (zi, zi1) = (&mut lo[i], &mut hi[0]);
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Eigenvalues of a symmetric tridiagonal, ascending.
pub fn tridiagonal_eigenvalues(diag: &[f64], offdiag: &[f64]) -> Result<Vec<f64>> {
    let mut d = diag.to_vec();
    tql2(&mut d, offdiag, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigenpairs of a symmetric tridiagonal, ascending; `vectors[j]` pairs with `values[j]`.
pub fn tridiagonal_eigensystem(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect();
    tql2(&mut d, offdiag, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&j| d[j]).collect();
    let vectors = order.iter().map(|&j| z[j].clone()).collect();
    Ok((values, vectors))
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eigh(h: &HermitianMatrix) -> Result<EigenSystem> {
    h.check()?;
    let t = tridiagonalize(h);
    let (values, tvecs) = tridiagonal_eigensystem(&t.diag, &t.offdiag)?;
    let vectors = tvecs.iter().map(|z| t.back_transform(z)).collect();
    Ok(EigenSystem { values, vectors })
}

/// All eigenvalues, ascending.
pub fn eigvalsh(h: &HermitianMatrix) -> Result<Vec<f64>> {
    h.check()?;
    let t = tridiagonalize(h);
    tridiagonal_eigenvalues(&t.diag, &t.offdiag)
}

/// Lowest `count` eigenpairs: QL for the values, inverse iteration on the
/// tridiagonal for the vectors, then back-transformation.
pub fn eigh_lowest(h: &HermitianMatrix, count: usize) -> Result<EigenSystem> {
    h.check()?;
    let n = h.dim();
    if count > n {
        return Err(Error::InvalidParameter(format!("requested {count} eigenpairs of a {n}-dimensional matrix")));
    }
    let t = tridiagonalize(h);
    let all = tridiagonal_eigenvalues(&t.diag, &t.offdiag)?;
    let values = all[..count].to_vec();
    let tvecs = inverse_iteration(&t.diag, &t.offdiag, &values);
    let vectors = tvecs.iter().map(|z| t.back_transform(z)).collect();
    Ok(EigenSystem { values, vectors })
}

/// Eigenvectors of a symmetric tridiagonal for ascending eigenvalue estimates.
///
/// Nearby eigenvalues (closer than `1e-3 * ||T||_1`) are treated as a cluster
/// and their vectors are Gram-Schmidt orthogonalized against each other.
fn inverse_iteration(diag: &[f64], offdiag: &[f64], values: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    if n == 1 {
        return values.iter().map(|_| vec![1.0]).collect();
    }
    let onenorm = (0..n)
        .map(|i| {
            diag[i].abs()
                + if i > 0 { offdiag[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { offdiag[i].abs() } else { 0.0 }
        })
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let ortol = 1e-3 * onenorm;
    let eps = f64::EPSILON;

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    let mut prev_shift = f64::NEG_INFINITY;
    // deterministic start vectors
    let mut seed: u64 = 0x9E37_79B9_7F4A_7C15;
    for (j, &lambda) in values.iter().enumerate() {
        if j > 0 && lambda - values[j - 1] > ortol {
            cluster_start = j;
        }
        let mut shift = lambda;
        if j > cluster_start {
            let pertol = 10.0 * (eps * shift).abs().max(eps * onenorm);
            if shift - prev_shift < pertol {
                shift = prev_shift + pertol;
            }
        }
        prev_shift = shift;

        let lu = TridiagonalLu::factor(diag, offdiag, shift, eps * onenorm);
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                seed ^= seed << 13;
                seed ^= seed >> 7;
                seed ^= seed << 17;
                (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        for _ in 0..3 {
            lu.solve(&mut x);
            for prev in &out[cluster_start..j] {
                let dot: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                for (xi, pi) in x.iter_mut().zip(prev) {
                    *xi -= dot * pi;
                }
            }
            let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            for xi in &mut x {
                *xi /= nrm;
            }
        }
        out.push(x);
    }
    out
}

/// LU factorization with partial pivoting of `T - shift I`.
struct TridiagonalLu {
    /// `u0[i]`, `u1[i]`, `u2[i]`: row `i` of U on the diagonal and two superdiagonals.
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    /// multiplier applied when eliminating row `i + 1`
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(diag: &[f64], offdiag: &[f64], shift: f64, tiny: f64) -> Self {
        let n = diag.len();
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];

        // current row i carries (a, b, c) in columns (i, i+1, i+2)
        let mut a = diag[0] - shift;
        let mut b = if n > 1 { offdiag[0] } else { 0.0 };
        let mut c = 0.0;
        for i in 0..n - 1 {
            let sub = offdiag[i];
            let next_d = diag[i + 1] - shift;
            let next_e = if i + 2 < n { offdiag[i + 1] } else { 0.0 };
            if sub.abs() > a.abs() {
                // swap rows i and i+1
                swapped[i] = true;
                u0[i] = sub;
                u1[i] = next_d;
                u2[i] = next_e;
                let m = a / sub;
                mult[i] = m;
                a = b - m * next_d;
                b = c - m * next_e;
                c = 0.0;
            } else {
                let piv = if a.abs() < tiny { tiny.copysign(a) } else { a };
                u0[i] = piv;
                u1[i] = b;
                u2[i] = c;
                let m = sub / piv;
                mult[i] = m;
                a = next_d - m * b;
                b = next_e;
                c = 0.0;
            }
        }
        u0[n - 1] = if a.abs() < tiny { tiny.copysign(a) } else { a };
        Self { u0, u1, u2, mult, swapped }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.mult[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
    }
}

/// Chained clustering of ascending values: consecutive gaps `<= tol` join a group.
pub fn cluster_degeneracies(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if v - values[i - 1] <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{inner, norm};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> HermitianMatrix {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut h = HermitianMatrix::zeros(n);
        for r in 0..n {
            h[(r, r)] = c(next(), 0.0);
            for col in 0..r {
                let z = c(next(), next());
                h[(r, col)] = z;
                h[(col, r)] = z.conj();
            }
        }
        h
    }

    fn max_residual(h: &HermitianMatrix, es: &EigenSystem) -> f64 {
        es.values
            .iter()
            .zip(&es.vectors)
            .map(|(&l, v)| {
                let hv = h.mul_vec(v);
                norm(&hv.iter().zip(v).map(|(a, b)| a - b * l).collect::<Vec<_>>())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn diagonal_matrix() {
        let h = HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let es = eigh(&h).unwrap();
        assert_eq!(es.values, vec![1.0, 2.0, 3.0]);
        // permutation eigenvectors up to phase
        assert!((es.vectors[0][1].norm() - 1.0).abs() < 1e-14);
        assert!((es.vectors[1][2].norm() - 1.0).abs() < 1e-14);
        assert!((es.vectors[2][0].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_x() {
        let h = HermitianMatrix::from_fn(2, |r, c_| if r != c_ { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let es = eigh(&h).unwrap();
        assert!((es.values[0] + 1.0).abs() < 1e-15);
        assert!((es.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn residual_and_orthonormality_random() {
        for (n, seed) in [(1, 1), (2, 2), (7, 3), (40, 4), (97, 5)] {
            let h = random_hermitian(n, seed);
            let es = eigh(&h).unwrap();
            let bound = 1e-10 * (1.0 + h.frobenius_norm());
            assert!(max_residual(&h, &es) <= bound, "residual n={n}");
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((inner(&es.vectors[i], &es.vectors[j]) - c(want, 0.0)).norm() < 1e-10);
                }
            }
            assert!(es.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn lowest_matches_full() {
        let h = random_hermitian(60, 11);
        let full = eigh(&h).unwrap();
        let low = eigh_lowest(&h, 5).unwrap();
        for j in 0..5 {
            assert!((full.values[j] - low.values[j]).abs() < 1e-12);
            assert!((inner(&full.vectors[j], &low.vectors[j]).norm() - 1.0).abs() < 1e-9);
        }
        assert!(max_residual(&h, &low) < 1e-10 * (1.0 + h.frobenius_norm()));
    }

    #[test]
    fn lowest_handles_exact_degeneracy() {
        // two copies of the same block: every eigenvalue is doubled
        let block = random_hermitian(6, 21);
        let h = HermitianMatrix::from_fn(12, |r, c_| {
            if r / 6 == c_ / 6 {
                block[(r % 6, c_ % 6)]
            } else {
                c(0.0, 0.0)
            }
        });
        let low = eigh_lowest(&h, 4).unwrap();
        assert!(max_residual(&h, &low) < 1e-10);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((inner(&low.vectors[i], &low.vectors[j]).norm() - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = HermitianMatrix::from_fn(2, |r, c_| if r < c_ { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(matches!(eigh(&h), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(cluster_degeneracies(&[0.5, 0.5 + 1e-12, 1.0], 1e-9), vec![vec![0, 1], vec![2]]);
        assert_eq!(cluster_degeneracies(&[1.0, 2.0, 3.0], 0.5), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(cluster_degeneracies(&[0.0, 0.4, 0.8], 0.5), vec![vec![0, 1, 2]]);
        assert!(cluster_degeneracies(&[], 0.1).is_empty());
    }
}
