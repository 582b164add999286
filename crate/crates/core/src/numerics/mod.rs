//! Dense and exact linear algebra.

pub mod eigen;
pub mod io;
pub mod matrix;
pub mod qr;
pub mod rational;

pub use eigen::{
    cholesky, cholesky_solve, extreme_singular_values, extreme_singular_values_with, leverage_scores,
    singular_values, symmetric_eigen, top_eigenvalue_from, top_eigenvalue_symmetric, top_right_singular, EigenEstimate,
    LanczosOptions, SpectrumSummary,
};
pub use io::{read_matrix, MatrixFile};
pub use matrix::{dot, norm2, norm_p, normalize, DenseMatrix};
pub use qr::{column_space_basis, haar_orthogonal, orthonormal_basis, QrDecomposition};
pub use rational::{parse_rational, primitive, rational_kernel_basis, to_f64, KernelBasis, RationalMatrix};
