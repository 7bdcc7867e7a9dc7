use crate::error::Result;
use crate::linalg::Matrix;
use crate::network::loss::Target;
use crate::network::net::{NetworkSpec, Params};

/// Compares backprop against central differences on every weight and bias
/// entry. Returns the largest `|fd − bp| / max(|fd|, |bp|, 1e-8)`.
pub fn finite_diff_check(
    spec: &NetworkSpec,
    params: &Params,
    x: &Matrix,
    target: Target<'_>,
    h: f64,
) -> Result<f64> {
    let (_, grads, _) = spec.loss_and_gradients(params, x, target)?;
    let loss_at = |p: &Params| -> Result<f64> { Ok(spec.evaluate(p, x, target)?.0) };
    let rel = |fd: f64, bp: f64| (fd - bp).abs() / fd.abs().max(bp.abs()).max(1e-8);

    let mut work = params.clone();
    let mut worst = 0.0_f64;
    let indices: Vec<usize> = params.iter().map(|(k, _)| k).collect();
    for k in indices {
        let grad = grads[k]
            .as_ref()
            .expect("every parameterized layer has a gradient");
        let (rows, cols) = grad.weights.shape();
        for i in 0..rows {
            for j in 0..cols {
                let orig = work.layer(k).expect("layer").weights.get(i, j);
                work.layer_mut(k)
                    .expect("layer")
                    .weights
                    .set(i, j, orig + h);
                let plus = loss_at(&work)?;
                work.layer_mut(k)
                    .expect("layer")
                    .weights
                    .set(i, j, orig - h);
                let minus = loss_at(&work)?;
                work.layer_mut(k).expect("layer").weights.set(i, j, orig);
                worst = worst.max(rel((plus - minus) / (2.0 * h), grad.weights.get(i, j)));
            }
        }
        if let Some(gb) = &grad.bias {
            for (i, &g) in gb.iter().enumerate() {
                let orig = work.layer(k).expect("layer").bias.as_ref().expect("bias")[i];
                work.layer_mut(k)
                    .expect("layer")
                    .bias
                    .as_mut()
                    .expect("bias")[i] = orig + h;
                let plus = loss_at(&work)?;
                work.layer_mut(k)
                    .expect("layer")
                    .bias
                    .as_mut()
                    .expect("bias")[i] = orig - h;
                let minus = loss_at(&work)?;
                work.layer_mut(k)
                    .expect("layer")
                    .bias
                    .as_mut()
                    .expect("bias")[i] = orig;
                worst = worst.max(rel((plus - minus) / (2.0 * h), g));
            }
        }
    }
    Ok(worst)
}
