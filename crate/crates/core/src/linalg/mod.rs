//! Dense Hermitian linear algebra.

mod eigen;
mod matrix;

pub use eigen::{
    cluster_degeneracies, eigh, eigh_lowest, eigvalsh, tridiagonal_eigensystem, tridiagonal_eigenvalues,
    tridiagonalize, EigenSystem, Tridiagonal,
};
pub use matrix::{inner, norm, ComplexMatrix, HermitianMatrix, HERMITIAN_TOL};
