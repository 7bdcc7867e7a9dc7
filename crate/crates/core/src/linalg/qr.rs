//! Householder QR and the sign-adjusted Q factor used by the Stiefel retraction.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Relative rank threshold: a column whose post-elimination norm falls below
/// `RANK_TOL * ‖A‖_F` is treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-12;

/// Raw Householder factorization: reflectors plus the (unadjusted) R.
struct Householder {
    /// Unit reflector vectors, `vs[k]` acts on rows `k..n`.
    vs: Vec<Vec<f64>>,
    r: Matrix,
    n: usize,
}

impl Householder {
    fn factor(a: &Matrix) -> Result<Self> {
        let (n, p) = a.shape();
        if n < p {
            return Err(Error::dim(
                "householder_qr",
                format!("needs rows >= cols, got {n}x{p}"),
            ));
        }
        let threshold = RANK_TOL * a.frobenius_norm();
        let mut work = a.clone();
        let mut vs = Vec::with_capacity(p);

        for k in 0..p {
            let mut v: Vec<f64> = (k..n).map(|i| work.get(i, k)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < threshold || norm == 0.0 {
                return Err(Error::RankDeficient { column: k, norm });
            }
            // Reflect onto -sign(x0)·‖x‖·e1 to avoid cancellation.
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if vnorm > 0.0 {
                v.iter_mut().for_each(|x| *x /= vnorm);
            }
            // work[k.., k..] -= 2 v (vᵀ work[k.., k..])
            for j in k..p {
                let dot: f64 = (k..n).map(|i| v[i - k] * work.get(i, j)).sum();
                if dot != 0.0 {
                    for i in k..n {
                        let updated = work.get(i, j) - 2.0 * v[i - k] * dot;
                        work.set(i, j, updated);
                    }
                }
            }
            work.set(k, k, alpha);
            for i in k + 1..n {
                work.set(i, k, 0.0);
            }
            vs.push(v);
        }
        let r = Matrix::from_fn(p, p, |i, j| if j >= i { work.get(i, j) } else { 0.0 });
        Ok(Self { vs, r, n })
    }

    /// Thin Q: the reflectors applied in reverse to the leading identity columns.
    fn thin_q(&self) -> Matrix {
        let p = self.vs.len();
        let mut q = Matrix::eye(self.n, p);
        for (k, v) in self.vs.iter().enumerate().rev() {
            for j in 0..p {
                let dot: f64 = (k..self.n).map(|i| v[i - k] * q.get(i, j)).sum();
                if dot != 0.0 {
                    for i in k..self.n {
                        let updated = q.get(i, j) - 2.0 * v[i - k] * dot;
                        q.set(i, j, updated);
                    }
                }
            }
        }
        q
    }
}

/// Flips every column of `q` (and matching row of `r`) whose diagonal entry
/// of `r` is negative.
fn adjust_signs(q: &mut Matrix, r: &mut Matrix) {
    for k in 0..r.rows() {
        if r.get(k, k) < 0.0 {
            for i in 0..q.rows() {
                q.set(i, k, -q.get(i, k));
            }
            for j in 0..r.cols() {
                r.set(k, j, -r.get(k, j));
            }
        }
    }
}

/// Thin QR factorization `a = q·r` with `q` n×p orthonormal and `r` p×p upper
/// triangular with positive diagonal.
pub fn householder_qr(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let h = Householder::factor(a)?;
    let mut q = h.thin_q();
    let mut r = h.r;
    adjust_signs(&mut q, &mut r);
    Ok((q, r))
}

/// The Q factor of the unique thin QR factorization whose R has a strictly
/// positive diagonal.
pub fn qf(a: &Matrix) -> Result<Matrix> {
    householder_qr(a).map(|(q, _)| q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, matmul_tn};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn orth_defect(q: &Matrix) -> f64 {
        let g = matmul_tn(q, q).unwrap();
        g.sub(&Matrix::identity(q.cols())).unwrap().frobenius_norm()
    }

    #[test]
    fn identity_columns() {
        let a = Matrix::eye(3, 2);
        let (q, r) = householder_qr(&a).unwrap();
        assert!(q.sub(&a).unwrap().max_abs() < 1e-15);
        assert!(r.sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn single_column_normalizes() {
        let a = Matrix::from_rows(&[&[3.0], &[4.0]]).unwrap();
        let (q, r) = householder_qr(&a).unwrap();
        assert!((q.get(0, 0) - 0.6).abs() < 1e-15);
        assert!((q.get(1, 0) - 0.8).abs() < 1e-15);
        assert!((r.get(0, 0) - 5.0).abs() < 1e-14);
    }

    #[test]
    fn qf_keeps_orthogonal_input() {
        let a = Matrix::from_diag(&[1.0, -1.0]);
        let q = qf(&a).unwrap();
        assert!(q.sub(&a).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Matrix::random_normal(6, 4, 1.0, &mut rng);
        let (q, r) = householder_qr(&a).unwrap();
        let back = matmul(&q, &r).unwrap();
        assert!(back.sub(&a).unwrap().frobenius_norm() < 1e-12);
        assert!(orth_defect(&q) < 1e-12);
        for i in 0..4 {
            assert!(r.get(i, i) > 0.0);
            for j in 0..i {
                assert_eq!(r.get(i, j), 0.0);
            }
        }
    }

    #[test]
    fn rank_deficient_is_rejected() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]).unwrap();
        assert!(matches!(
            qf(&a),
            Err(Error::RankDeficient { column: 1, .. })
        ));
        assert!(qf(&Matrix::zeros(3, 1)).is_err());
        assert!(qf(&Matrix::zeros(2, 3)).is_err());
    }
}
