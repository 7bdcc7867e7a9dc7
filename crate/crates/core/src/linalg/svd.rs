use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigh, matmul, matmul_nt, matmul_tn, qf, Matrix};

/// Singular values below this fraction of `‖A‖_F` are treated as zero.
const ZERO_SINGULAR_TOL: f64 = 1e-12;

/// Fixed seed for completing the singular vectors of a rank-deficient input.
const COMPLETION_SEED: u64 = 0x0005_eed0_f5fd;

/// Truncated SVD `A ≈ U · diag(s) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let us = self.u.scale_columns(&self.s).expect("s matches u");
        matmul_nt(&us, &self.v).expect("u and v share rank")
    }
}

/// Rank-`p` thin SVD computed from the eigendecomposition of the smaller Gram
/// matrix. The other factor is recovered as `A·V·diag(1/s)` (or its transpose
/// analogue), then passed through `qf`, which also completes directions whose
/// singular value is numerically zero.
pub fn thin_svd(a: &Matrix, p: usize) -> Result<ThinSvd> {
    let (n1, n2) = a.shape();
    if p == 0 || p > n1.min(n2) {
        return Err(Error::dim(
            "thin_svd",
            format!("rank {p} out of range for {n1}x{n2}"),
        ));
    }
    if n2 <= n1 {
        let (v, s) = gram_side(&matmul_tn(a, a)?, p)?;
        let u = other_side(&matmul(a, &v)?, &s, a.frobenius_norm())?;
        Ok(ThinSvd { u, s, v })
    } else {
        let (u, s) = gram_side(&matmul_nt(a, a)?, p)?;
        let v = other_side(&matmul_tn(a, &u)?, &s, a.frobenius_norm())?;
        Ok(ThinSvd { u, s, v })
    }
}

/// Top-`p` eigenvectors and singular values of a Gram matrix.
fn gram_side(gram: &Matrix, p: usize) -> Result<(Matrix, Vec<f64>)> {
    let eig = jacobi_eigh(gram)?;
    let s = eig.values[..p].iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok((eig.vectors.leading_columns(p), s))
}

/// Normalizes the columns of `projected` (= A·V or Aᵀ·U) by the singular
/// values, replacing numerically null columns with random directions before
/// orthonormalizing.
fn other_side(projected: &Matrix, s: &[f64], norm_a: f64) -> Result<Matrix> {
    let cutoff = ZERO_SINGULAR_TOL * norm_a;
    let mut rng = ChaCha8Rng::seed_from_u64(COMPLETION_SEED);
    let filler = Matrix::random_normal(projected.rows(), projected.cols(), 1.0, &mut rng);
    let mut cols = projected.clone();
    for (j, &sj) in s.iter().enumerate() {
        if sj > cutoff {
            let scaled: Vec<f64> = projected.column(j).iter().map(|x| x / sj).collect();
            cols.set_column(j, &scaled);
        } else {
            cols.set_column(j, &filler.column(j));
        }
    }
    // Gram-Schmidt order keeps the leading (well-determined) columns fixed up
    // to rounding and orthogonalizes the fillers against them.
    qf(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn orth_defect(q: &Matrix) -> f64 {
        matmul_tn(q, q)
            .unwrap()
            .sub(&Matrix::identity(q.cols()))
            .unwrap()
            .frobenius_norm()
    }

    #[test]
    fn diagonal_truncation() {
        let a = Matrix::from_diag(&[5.0, 3.0, 1.0]);
        let svd = thin_svd(&a, 2).unwrap();
        assert!((svd.s[0] - 5.0).abs() < 1e-12);
        assert!((svd.s[1] - 3.0).abs() < 1e-12);
        let err = svd.reconstruct().sub(&a).unwrap().frobenius_norm();
        assert!((err - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (n1, n2) in [(6, 4), (4, 6), (5, 5)] {
            let a = Matrix::random_normal(n1, n2, 1.0, &mut rng);
            let svd = thin_svd(&a, n1.min(n2)).unwrap();
            assert!(svd.reconstruct().sub(&a).unwrap().frobenius_norm() < 1e-10);
            assert!(orth_defect(&svd.u) < 1e-10);
            assert!(orth_defect(&svd.v) < 1e-10);
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_input_is_completed() {
        // rank 1, asked for rank 3
        let u = Matrix::column_vector(&[1.0, 2.0, 0.0, -1.0]);
        let v = Matrix::column_vector(&[0.5, 0.5, 1.0]);
        let a = matmul_nt(&u, &v).unwrap();
        let svd = thin_svd(&a, 3).unwrap();
        assert!(svd.s[1] < 1e-7 && svd.s[2] < 1e-7);
        assert!(orth_defect(&svd.u) < 1e-10);
        assert!(orth_defect(&svd.v) < 1e-10);
        assert!(svd.reconstruct().sub(&a).unwrap().frobenius_norm() < 1e-7);
    }

    #[test]
    fn rank_out_of_range() {
        assert!(thin_svd(&Matrix::identity(3), 4).is_err());
        assert!(thin_svd(&Matrix::identity(3), 0).is_err());
    }
}
