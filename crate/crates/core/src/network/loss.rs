use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean squared reconstruction error against a target matrix.
    MseReconstruction,
    /// Softmax followed by mean cross-entropy against integer labels.
    SoftmaxCrossEntropy,
}

/// What the network output is compared against.
#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Values(&'a Matrix),
    Labels(&'a [usize]),
}

/// `(1/B) Σᵢ ‖x̂ᵢ − xᵢ‖²` and its gradient `(2/B)(x̂ − x)`.
pub fn mse_reconstruction_loss(x_hat: &Matrix, x: &Matrix) -> Result<(f64, Matrix)> {
    let diff = x_hat.sub(x)?;
    let batch = x.cols() as f64;
    let loss = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / batch;
    Ok((loss, diff.scale(2.0 / batch)))
}

/// Mean cross-entropy of column-wise softmax against `labels`, with the
/// gradient `(softmax − onehot) / B`.
pub fn softmax_ce_loss(logits: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    let (classes, batch) = logits.shape();
    if labels.len() != batch {
        return Err(Error::dim(
            "softmax_ce_loss",
            format!("{} labels for batch {batch}", labels.len()),
        ));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::Input(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    let mut grad = Matrix::zeros(classes, batch);
    let mut loss = 0.0;
    for (b, &label) in labels.iter().enumerate() {
        let max = (0..classes)
            .map(|c| logits.get(c, b))
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = (0..classes).map(|c| (logits.get(c, b) - max).exp()).sum();
        let log_sum = sum.ln();
        loss += log_sum - (logits.get(label, b) - max);
        for c in 0..classes {
            let prob = (logits.get(c, b) - max - log_sum).exp();
            let onehot = if c == label { 1.0 } else { 0.0 };
            grad.set(c, b, (prob - onehot) / batch as f64);
        }
    }
    Ok((loss / batch as f64, grad))
}

/// Fraction of columns whose arg-max matches the label.
pub fn accuracy(logits: &Matrix, labels: &[usize]) -> f64 {
    let correct = labels
        .iter()
        .enumerate()
        .filter(|&(b, &label)| {
            let best = (0..logits.rows())
                .max_by(|&i, &j| {
                    logits
                        .get(i, b)
                        .total_cmp(&logits.get(j, b))
                        .then(j.cmp(&i))
                })
                .unwrap_or(0);
            best == label
        })
        .count();
    correct as f64 / labels.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mse_examples() {
        let x = Matrix::from_rows(&[&[1.0], &[2.0]]).unwrap();
        let (loss, grad) = mse_reconstruction_loss(&x, &x).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grad.max_abs(), 0.0);

        let x_hat = Matrix::from_rows(&[&[4.0], &[6.0]]).unwrap();
        let (loss, grad) = mse_reconstruction_loss(&x_hat, &x).unwrap();
        assert_eq!(loss, 25.0);
        assert_eq!(grad.as_slice(), &[6.0, 8.0]);
        assert!(mse_reconstruction_loss(&x, &Matrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x_hat = Matrix::random_normal(3, 4, 1.0, &mut rng);
        let x = Matrix::random_normal(3, 4, 1.0, &mut rng);
        let (_, grad) = mse_reconstruction_loss(&x_hat, &x).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            for j in 0..4 {
                let (mut p, mut m) = (x_hat.clone(), x_hat.clone());
                p.set(i, j, x_hat.get(i, j) + h);
                m.set(i, j, x_hat.get(i, j) - h);
                let fd = (mse_reconstruction_loss(&p, &x).unwrap().0
                    - mse_reconstruction_loss(&m, &x).unwrap().0)
                    / (2.0 * h);
                assert!((fd - grad.get(i, j)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn softmax_uniform_and_saturation() {
        let logits = Matrix::zeros(2, 3);
        let (loss, _) = softmax_ce_loss(&logits, &[0, 1, 1]).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);

        let mut prev = f64::INFINITY;
        for margin in [1.0, 5.0, 20.0, 100.0] {
            let logits = Matrix::from_rows(&[&[margin], &[0.0]]).unwrap();
            let (loss, _) = softmax_ce_loss(&logits, &[0]).unwrap();
            assert!(loss < prev);
            prev = loss;
        }
        assert!(prev < 1e-40);
    }

    #[test]
    fn softmax_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let logits = Matrix::random_normal(4, 3, 2.0, &mut rng);
        let labels = [2, 0, 3];
        let (_, grad) = softmax_ce_loss(&logits, &labels).unwrap();
        let h = 1e-5;
        for i in 0..4 {
            for j in 0..3 {
                let (mut p, mut m) = (logits.clone(), logits.clone());
                p.set(i, j, logits.get(i, j) + h);
                m.set(i, j, logits.get(i, j) - h);
                let fd = (softmax_ce_loss(&p, &labels).unwrap().0
                    - softmax_ce_loss(&m, &labels).unwrap().0)
                    / (2.0 * h);
                assert!((fd - grad.get(i, j)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn softmax_rejects_bad_label() {
        assert!(matches!(
            softmax_ce_loss(&Matrix::zeros(2, 1), &[2]),
            Err(Error::Input(_))
        ));
    }
}
