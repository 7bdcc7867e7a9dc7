//! Single-parameter update rules.
//!
//! All steppers share the classical momentum recursion
//! `Θ ← μΘ − η·g` with the buffer kept in the ambient space. They differ in
//! how the step is applied:
//!
//! - BP: `W ← W + Θ`
//! - gBP: `W ← Υ_W(π_W(Θ))`, projecting the buffer at use time
//! - PGD: `W ← P(W + Θ)`, the metric projection onto the constraint set
//!
//! With `μ = 0` the gBP step is evaluated as `Υ_W(−η·π_W(g))`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifold::Manifold;

fn check_shapes(w: &Matrix, grad: &Matrix, theta: &Matrix, op: &'static str) -> Result<()> {
    w.require_same_shape(grad, op)?;
    w.require_same_shape(theta, op)
}

/// `μΘ − η·g`
fn momentum_update(theta: &Matrix, grad: &Matrix, lr: f64, momentum: f64) -> Result<Matrix> {
    if momentum == 0.0 {
        return Ok(grad.scale(-lr));
    }
    let mut next = theta.scale(momentum);
    next.axpy(-lr, grad)?;
    Ok(next)
}

/// Plain (optionally momentum-accelerated) gradient step.
pub fn bp_step(
    w: &Matrix,
    grad: &Matrix,
    lr: f64,
    momentum: f64,
    theta: &mut Matrix,
) -> Result<Matrix> {
    check_shapes(w, grad, theta, "bp_step")?;
    let next = momentum_update(theta, grad, lr, momentum)?;
    let w_new = w.add(&next)?;
    *theta = next;
    Ok(w_new)
}

/// Same rule as [`bp_step`] on a bias vector, in place.
pub fn bias_step(
    b: &mut [f64],
    grad: &[f64],
    lr: f64,
    momentum: f64,
    theta: &mut [f64],
) -> Result<()> {
    if b.len() != grad.len() || b.len() != theta.len() {
        return Err(Error::dim(
            "bias_step",
            format!(
                "bias {}, grad {}, momentum {}",
                b.len(),
                grad.len(),
                theta.len()
            ),
        ));
    }
    for ((bi, &gi), ti) in b.iter_mut().zip(grad).zip(theta.iter_mut()) {
        let next = if momentum == 0.0 {
            -lr * gi
        } else {
            momentum * *ti - lr * gi
        };
        *bi += next;
        *ti = next;
    }
    Ok(())
}

/// Momentum-free Riemannian step `Υ_W(−η·π_W(g))`.
pub fn gbp_update(m: &Manifold, w: &Matrix, grad: &Matrix, lr: f64) -> Result<Matrix> {
    let riemannian = m.tangent_project(w, grad)?;
    m.retract(w, &riemannian.scale(-lr))
}

/// Riemannian step with momentum. The retraction is anchored at the current
/// iterate `w`.
pub fn gbp_step(
    m: &Manifold,
    w: &Matrix,
    grad: &Matrix,
    lr: f64,
    momentum: f64,
    theta: &mut Matrix,
) -> Result<Matrix> {
    check_shapes(w, grad, theta, "gbp_step")?;
    let next = momentum_update(theta, grad, lr, momentum)?;
    let w_new = if momentum == 0.0 {
        gbp_update(m, w, grad, lr)?
    } else {
        let direction = m.tangent_project(w, &next)?;
        m.retract(w, &direction)?
    };
    *theta = next;
    Ok(w_new)
}

/// Projected gradient step: Euclidean (momentum) step followed by the
/// nearest-point projection onto the manifold.
pub fn pgd_step(
    m: &Manifold,
    w: &Matrix,
    grad: &Matrix,
    lr: f64,
    momentum: f64,
    theta: &mut Matrix,
) -> Result<Matrix> {
    check_shapes(w, grad, theta, "pgd_step")?;
    let next = momentum_update(theta, grad, lr, momentum)?;
    let w_new = m.project(&w.add(&next)?)?;
    *theta = next;
    Ok(w_new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul, sym};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_rows(&[&[v]]).unwrap()
    }

    #[test]
    fn bp_hand_examples() {
        let mut theta = scalar(0.0);
        let w = bp_step(&scalar(1.0), &scalar(2.0), 0.1, 0.0, &mut theta).unwrap();
        assert_eq!(w.get(0, 0), 0.8);
        let w = bp_step(&scalar(1.0), &scalar(0.0), 0.1, 0.9, &mut scalar(0.0)).unwrap();
        assert_eq!(w.get(0, 0), 1.0);
    }

    #[test]
    fn two_momentum_steps_expand() {
        // Θ⁽²⁾ = −μη g⁽¹⁾ − η g⁽²⁾
        let (mu, eta) = (0.9, 0.1);
        let (g1, g2) = (scalar(2.0), scalar(-3.0));
        let mut theta = scalar(0.0);
        let w1 = bp_step(&scalar(1.0), &g1, eta, mu, &mut theta).unwrap();
        let w2 = bp_step(&w1, &g2, eta, mu, &mut theta).unwrap();
        let expected = -mu * eta * 2.0 - eta * -3.0;
        assert!((theta.get(0, 0) - expected).abs() < 1e-15);
        assert!((w2.get(0, 0) - (1.0 - eta * 2.0 + expected)).abs() < 1e-15);
    }

    #[test]
    fn euclidean_gbp_is_bitwise_bp() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Manifold::euclidean(4, 3);
        for mu in [0.0, 0.9] {
            let mut w_bp = Matrix::random_normal(4, 3, 1.0, &mut rng);
            let mut w_gbp = w_bp.clone();
            let (mut t_bp, mut t_gbp) = (Matrix::zeros(4, 3), Matrix::zeros(4, 3));
            for _ in 0..20 {
                let g = Matrix::random_normal(4, 3, 1.0, &mut rng);
                w_bp = bp_step(&w_bp, &g, 0.03, mu, &mut t_bp).unwrap();
                w_gbp = gbp_step(&m, &w_gbp, &g, 0.03, mu, &mut t_gbp).unwrap();
            }
            assert_eq!(w_bp, w_gbp);
        }
    }

    #[test]
    fn normal_space_gradient_leaves_point_fixed() {
        let m = Manifold::stiefel(6, 3).unwrap();
        let w = m.random_point(2);
        let s = sym(&Matrix::random_normal(
            3,
            3,
            1.0,
            &mut ChaCha8Rng::seed_from_u64(3),
        ))
        .unwrap();
        let g = matmul(&w, &s).unwrap();
        let out = gbp_step(&m, &w, &g, 0.1, 0.0, &mut Matrix::zeros(6, 3)).unwrap();
        assert!(out.sub(&w).unwrap().frobenius_norm() < 1e-13);
    }

    #[test]
    fn pgd_zero_gradient_is_fixed_point() {
        let m = Manifold::stiefel(5, 2).unwrap();
        let w = m.random_point(7);
        let out = pgd_step(
            &m,
            &w,
            &Matrix::zeros(5, 2),
            0.1,
            0.0,
            &mut Matrix::zeros(5, 2),
        )
        .unwrap();
        assert!(out.sub(&w).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn bias_step_matches_bp() {
        let mut b = vec![1.0, -1.0];
        let mut t = vec![0.0, 0.0];
        bias_step(&mut b, &[2.0, 0.0], 0.1, 0.0, &mut t).unwrap();
        assert_eq!(b, vec![0.8, -1.0]);
        assert!(bias_step(&mut b, &[1.0], 0.1, 0.0, &mut t).is_err());
    }
}
