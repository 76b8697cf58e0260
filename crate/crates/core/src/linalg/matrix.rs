//! Dense complex matrices in row-major storage.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance used when validating Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Square complex matrix that is expected to be Hermitian.
///
/// Construction does not enforce Hermiticity; [`HermitianMatrix::check`] does,
/// and the eigensolver calls it before doing any work.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Wraps row-major data; fails if `data.len() != dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// Validates `max|a_ij - conj(a_ji)| <= HERMITIAN_TOL * max|a_ij|`.
    pub fn check(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        let tolerance = HERMITIAN_TOL * self.max_abs();
        if defect > tolerance {
            return Err(Error::NotHermitian { defect, tolerance });
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)].re).sum()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `U A U*` for a unitary (or any square) `u` of matching size.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> HermitianMatrix {
        let a = ComplexMatrix { rows: self.dim, cols: self.dim, data: self.data.clone() };
        let out = u.matmul(&a).matmul(&u.adjoint());
        HermitianMatrix { dim: self.dim, data: out.data }
    }

    pub fn into_general(self) -> ComplexMatrix {
        ComplexMatrix { rows: self.dim, cols: self.dim, data: self.data }
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for HermitianMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

/// General rectangular complex matrix (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.add(&rhs.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Top-left `rows x cols` block.
    pub fn crop(&self, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |r, c| self[(r, c)])
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().map(|z| z.norm()).sum())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Matrix exponential by scaling and squaring with a truncated Taylor series.
    pub fn expm(&self) -> ComplexMatrix {
        assert_eq!(self.rows, self.cols, "expm needs a square matrix");
        let n = self.rows;
        let norm = self.norm_inf();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
        let scaled = self.scale(Complex64::new(0.5f64.powi(squarings), 0.0));
        // ||scaled|| <= 1/2, so 20 terms leave a remainder below 1e-24.
        let mut result = ComplexMatrix::identity(n);
        let mut term = ComplexMatrix::identity(n);
        for j in 1..=20 {
            term = term.matmul(&scaled).scale(Complex64::new(1.0 / j as f64, 0.0));
            result = result.add(&term);
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Standard inner product `sum_i a_i conj(b_i)`, linear in the first slot.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_of_pauli_rotation() {
        // exp(-i t sigma_x) = cos t I - i sin t sigma_x
        let t = 1.3;
        let gen = ComplexMatrix::from_fn(2, 2, |r, c_| if r != c_ { c(0.0, -t) } else { c(0.0, 0.0) });
        let e = gen.expm();
        assert!((e[(0, 0)] - c(t.cos(), 0.0)).norm() < 1e-14);
        assert!((e[(0, 1)] - c(0.0, -t.sin())).norm() < 1e-14);
    }

    #[test]
    fn hermitian_check_rejects_asymmetry() {
        let mut h = HermitianMatrix::zeros(2);
        h[(0, 1)] = c(1.0, 0.5);
        h[(1, 0)] = c(1.0, 0.5);
        assert!(matches!(h.check(), Err(Error::NotHermitian { .. })));
        h[(1, 0)] = c(1.0, -0.5);
        assert!(h.check().is_ok());
    }

    #[test]
    fn from_row_major_length_mismatch() {
        assert!(HermitianMatrix::from_row_major(2, vec![c(0.0, 0.0); 3]).is_err());
    }
}
