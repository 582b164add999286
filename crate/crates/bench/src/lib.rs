//! Fixtures shared by the benchmarks.

use spreadlab::instances::gen_gaussian_null;
use spreadlab::numerics::{orthonormal_basis, RationalMatrix};
use spreadlab::DenseMatrix;

/// Gaussian design with a fixed seed.
pub fn gaussian_design(n: usize, d: usize) -> DenseMatrix {
    gen_gaussian_null(n, d, 42).expect("valid dimensions")
}

/// Orthonormal basis of a Gaussian design.
pub fn gaussian_basis(n: usize, d: usize) -> DenseMatrix {
    orthonormal_basis(&gaussian_design(n, d)).expect("full rank")
}

/// A 4 x 8 sign matrix with entries in {-1, 0, 1}.
pub fn sign_matrix() -> RationalMatrix {
    let rows: Vec<Vec<i64>> = (0..4).map(|i| (0..8).map(|j| ((i * 8 + j) * 7 % 3) as i64 - 1).collect()).collect();
    RationalMatrix::from_i64_rows(&rows).expect("rectangular rows")
}
