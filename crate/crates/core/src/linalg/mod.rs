//! Dense linear algebra kernels: products, Householder QR, symmetric
//! eigendecomposition and thin SVD. Every routine is sequential and
//! deterministic.

mod eigen;
mod matrix;
mod qr;
mod svd;

pub use eigen::{jacobi_eigh, SymmetricEigen};
pub use matrix::{matmul, matmul_nt, matmul_tn, sym, Matrix};
pub use qr::{householder_qr, qf, RANK_TOL};
pub use svd::{thin_svd, ThinSvd};
