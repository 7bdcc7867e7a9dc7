use crate::error::{Error, Result};
use crate::linalg::Matrix;

const MAX_SWEEPS: usize = 100;
const OFF_DIAG_TOL: f64 = 1e-14;
const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues, non-increasing.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `values`.
    pub vectors: Matrix,
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j).powi(2);
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps until the off-diagonal Frobenius norm drops below
/// `1e-14 · ‖A‖_F`, or 100 sweeps have run.
pub fn jacobi_eigh(a: &Matrix) -> Result<SymmetricEigen> {
    if !a.is_square() {
        return Err(Error::dim(
            "jacobi_eigh",
            format!("non-square {:?}", a.shape()),
        ));
    }
    let n = a.rows();
    let scale = a.frobenius_norm();
    let asym = a.sub(&a.transpose())?.frobenius_norm();
    if asym > SYMMETRY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Input(format!(
            "jacobi_eigh needs a symmetric matrix (asymmetry {asym:e})"
        )));
    }

    let mut m = crate::linalg::sym(a)?;
    let mut v = Matrix::identity(n);
    let threshold = OFF_DIAG_TOL * scale;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&m) <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // M <- Jᵀ M J, touching only rows/cols p and q.
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);

                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let diag = m.diag();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    Ok(SymmetricEigen {
        values: order.iter().map(|&i| diag[i]).collect(),
        vectors: v.select_columns(&order),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, matmul_nt, matmul_tn};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_input_sorts() {
        let e = jacobi_eigh(&Matrix::from_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 2.0, 1.0]);
        let expected = Matrix::identity(3).select_columns(&[0, 2, 1]);
        assert_eq!(e.vectors, expected);
    }

    #[test]
    fn classic_two_by_two() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let e = jacobi_eigh(&a).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = Matrix::random_normal(7, 7, 1.0, &mut rng);
        let a = crate::linalg::sym(&b).unwrap();
        let e = jacobi_eigh(&a).unwrap();
        let back = matmul_nt(&e.vectors.scale_columns(&e.values).unwrap(), &e.vectors).unwrap();
        assert!(back.sub(&a).unwrap().frobenius_norm() < 1e-10);
        let vtv = matmul_tn(&e.vectors, &e.vectors).unwrap();
        assert!(vtv.sub(&Matrix::identity(7)).unwrap().frobenius_norm() < 1e-10);
        let av = matmul(&a, &e.vectors).unwrap();
        let vl = e.vectors.scale_columns(&e.values).unwrap();
        assert!(av.sub(&vl).unwrap().frobenius_norm() < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_asymmetric() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(jacobi_eigh(&a), Err(Error::Input(_))));
    }
}
