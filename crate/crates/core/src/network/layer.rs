use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matmul, matmul_nt, matmul_tn, Matrix};
use crate::manifold::{Manifold, ManifoldKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative at `z`. ReLU uses 0 at the kink.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let s = self.apply(z);
                s * (1.0 - s)
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

pub fn activation_forward(kind: Activation, z: &Matrix) -> Matrix {
    z.map(|v| kind.apply(v))
}

/// Multiplies `upstream` by the elementwise derivative evaluated at `z`.
pub fn activation_backward(kind: Activation, z: &Matrix, upstream: &Matrix) -> Result<Matrix> {
    z.require_same_shape(upstream, "activation_backward")?;
    Ok(Matrix::from_fn(z.rows(), z.cols(), |i, j| {
        upstream.get(i, j) * kind.derivative(z.get(i, j))
    }))
}

/// One layer of a feed-forward network.
///
/// Weight conventions: a `FullyConnected` layer stores `W` as
/// `in_dim × out_dim` and computes `Wᵀx + b`, so a Stiefel constraint means
/// orthonormal columns with one column per output unit. A `TransposedFc`
/// layer stores `W` as `out_dim × in_dim` and computes `Wx + b`; it serves as
/// the expanding half of autoencoders and low-rank factorizations, and may
/// reuse (tie) the weight of an earlier `FullyConnected` layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    FullyConnected {
        in_dim: usize,
        out_dim: usize,
        manifold: ManifoldKind,
        bias: bool,
    },
    TransposedFc {
        in_dim: usize,
        out_dim: usize,
        manifold: ManifoldKind,
        bias: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tied_to: Option<usize>,
    },
    /// Elementwise `w ⊙ x + b`; the weight is stored as a `dim × 1` matrix.
    DiagonalScale {
        dim: usize,
        bias: bool,
    },
    Activation {
        dim: usize,
        activation: Activation,
    },
}

impl LayerSpec {
    pub fn fc(in_dim: usize, out_dim: usize, manifold: ManifoldKind, bias: bool) -> Self {
        LayerSpec::FullyConnected {
            in_dim,
            out_dim,
            manifold,
            bias,
        }
    }

    pub fn transposed(in_dim: usize, out_dim: usize, manifold: ManifoldKind, bias: bool) -> Self {
        LayerSpec::TransposedFc {
            in_dim,
            out_dim,
            manifold,
            bias,
            tied_to: None,
        }
    }

    pub fn tied(in_dim: usize, out_dim: usize, source: usize) -> Self {
        LayerSpec::TransposedFc {
            in_dim,
            out_dim,
            manifold: ManifoldKind::Euclidean,
            bias: false,
            tied_to: Some(source),
        }
    }

    pub fn activation(dim: usize, activation: Activation) -> Self {
        LayerSpec::Activation { dim, activation }
    }

    pub fn in_dim(&self) -> usize {
        match *self {
            LayerSpec::FullyConnected { in_dim, .. } | LayerSpec::TransposedFc { in_dim, .. } => {
                in_dim
            }
            LayerSpec::DiagonalScale { dim, .. } | LayerSpec::Activation { dim, .. } => dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match *self {
            LayerSpec::FullyConnected { out_dim, .. } | LayerSpec::TransposedFc { out_dim, .. } => {
                out_dim
            }
            LayerSpec::DiagonalScale { dim, .. } | LayerSpec::Activation { dim, .. } => dim,
        }
    }

    pub fn has_bias(&self) -> bool {
        match *self {
            LayerSpec::FullyConnected { bias, .. }
            | LayerSpec::TransposedFc { bias, .. }
            | LayerSpec::DiagonalScale { bias, .. } => bias,
            LayerSpec::Activation { .. } => false,
        }
    }

    pub fn tied_to(&self) -> Option<usize> {
        match *self {
            LayerSpec::TransposedFc { tied_to, .. } => tied_to,
            _ => None,
        }
    }

    /// Descriptor of the layer's own weight, if it has one.
    pub fn weight_manifold(&self) -> Result<Option<Manifold>> {
        match *self {
            LayerSpec::FullyConnected {
                in_dim,
                out_dim,
                manifold,
                ..
            } => Manifold::new(manifold, in_dim, out_dim).map(Some),
            LayerSpec::TransposedFc {
                in_dim,
                out_dim,
                manifold,
                tied_to: None,
                ..
            } => Manifold::new(manifold, out_dim, in_dim).map(Some),
            LayerSpec::DiagonalScale { dim, .. } => Ok(Some(Manifold::euclidean(dim, 1))),
            _ => Ok(None),
        }
    }
}

/// Live parameters of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamState {
    pub weights: Matrix,
    pub manifold: Manifold,
    pub bias: Option<Vec<f64>>,
    /// Ambient-space momentum buffer, same shape as `weights`.
    pub momentum: Matrix,
    pub bias_momentum: Option<Vec<f64>>,
}

impl ParamState {
    pub fn new(weights: Matrix, manifold: Manifold, bias: Option<Vec<f64>>) -> Result<Self> {
        if weights.shape() != manifold.shape() {
            return Err(Error::dim(
                "ParamState::new",
                format!("weights {:?} vs manifold {manifold}", weights.shape()),
            ));
        }
        let momentum = Matrix::zeros(weights.rows(), weights.cols());
        let bias_momentum = bias.as_ref().map(|b| vec![0.0; b.len()]);
        Ok(Self {
            weights,
            manifold,
            bias,
            momentum,
            bias_momentum,
        })
    }

    pub fn defect(&self) -> f64 {
        self.manifold.defect(&self.weights)
    }

    pub fn reset_momentum(&mut self) {
        self.momentum = Matrix::zeros(self.weights.rows(), self.weights.cols());
        if let Some(b) = &mut self.bias_momentum {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// Gradients of a fully-connected layer.
#[derive(Debug, Clone)]
pub struct FcGrads {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub input: Matrix,
}

/// `Wᵀx + b` for every column of `x`. `w` is `n × p`, `x` is `n × B`.
pub fn fc_forward(w: &Matrix, b: Option<&[f64]>, x: &Matrix) -> Result<Matrix> {
    let mut y = matmul_tn(w, x)?;
    if let Some(b) = b {
        y.add_to_rows(b)?;
    }
    Ok(y)
}

/// Backward pass of [`fc_forward`]. `upstream` is `∂E/∂y` (`p × B`) for the
/// full batch loss, so no further batch averaging happens here.
pub fn fc_backward(w: &Matrix, x: &Matrix, upstream: &Matrix) -> Result<FcGrads> {
    if upstream.rows() != w.cols() || upstream.cols() != x.cols() || x.rows() != w.rows() {
        return Err(Error::dim(
            "fc_backward",
            format!(
                "w {:?}, x {:?}, upstream {:?}",
                w.shape(),
                x.shape(),
                upstream.shape()
            ),
        ));
    }
    Ok(FcGrads {
        weights: matmul_nt(x, upstream)?,
        bias: upstream.row_sums(),
        input: matmul(w, upstream)?,
    })
}

/// `Wx + b` with `w` stored `out × in`.
pub fn transposed_fc_forward(w: &Matrix, b: Option<&[f64]>, x: &Matrix) -> Result<Matrix> {
    let mut y = matmul(w, x)?;
    if let Some(b) = b {
        y.add_to_rows(b)?;
    }
    Ok(y)
}

pub fn transposed_fc_backward(w: &Matrix, x: &Matrix, upstream: &Matrix) -> Result<FcGrads> {
    if upstream.rows() != w.rows() || upstream.cols() != x.cols() || x.rows() != w.cols() {
        return Err(Error::dim(
            "transposed_fc_backward",
            format!(
                "w {:?}, x {:?}, upstream {:?}",
                w.shape(),
                x.shape(),
                upstream.shape()
            ),
        ));
    }
    Ok(FcGrads {
        weights: matmul_nt(upstream, x)?,
        bias: upstream.row_sums(),
        input: matmul_tn(w, upstream)?,
    })
}

/// The composite realizing `f(W₂·W₁ᵀx + b)`: a bias-free Stiefel FC layer,
/// a biased diagonal scale and the activation. The effective weight `W₁·W₂`
/// has mutually orthogonal columns with norms `|w₂ᵢ|`.
pub fn build_noncompact_stiefel_layer(
    n: usize,
    p: usize,
    activation: Activation,
) -> Result<Vec<LayerSpec>> {
    if p > n || p == 0 {
        return Err(Error::dim(
            "build_noncompact_stiefel_layer",
            format!("needs 0 < p <= n, got n={n}, p={p}"),
        ));
    }
    Ok(vec![
        LayerSpec::fc(n, p, ManifoldKind::Stiefel, false),
        LayerSpec::DiagonalScale { dim: p, bias: true },
        LayerSpec::activation(p, activation),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fc_forward_examples() {
        let x = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]).unwrap();
        let y = fc_forward(&Matrix::eye(3, 2), None, &x).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 2.0, 3.0, 4.0]);

        let y = fc_forward(&Matrix::zeros(3, 2), Some(&[0.5, -1.0]), &x).unwrap();
        assert_eq!(y.as_slice(), &[0.5, 0.5, -1.0, -1.0]);
    }

    #[test]
    fn fc_forward_matches_column_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = Matrix::random_normal(5, 3, 1.0, &mut rng);
        let x = Matrix::random_normal(5, 4, 1.0, &mut rng);
        let b = [0.1, -0.2, 0.3];
        let y = fc_forward(&w, Some(&b), &x).unwrap();
        for col in 0..4 {
            for (j, bj) in b.iter().enumerate() {
                let v: f64 = (0..5).map(|i| w.get(i, j) * x.get(i, col)).sum::<f64>() + bj;
                assert!((y.get(j, col) - v).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn fc_backward_zero_and_scalar() {
        let w = Matrix::from_rows(&[&[2.0]]).unwrap();
        let x = Matrix::from_rows(&[&[3.0]]).unwrap();
        let g = Matrix::from_rows(&[&[0.5]]).unwrap();
        let grads = fc_backward(&w, &x, &g).unwrap();
        assert_eq!(grads.weights.get(0, 0), 1.5);
        assert_eq!(grads.input.get(0, 0), 1.0);
        assert_eq!(grads.bias, vec![0.5]);

        let grads = fc_backward(&w, &x, &Matrix::zeros(1, 1)).unwrap();
        assert_eq!(grads.weights.max_abs() + grads.input.max_abs(), 0.0);
        assert!(fc_backward(&w, &x, &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn fc_backward_matches_finite_differences() {
        // E = Σ c ⊙ fc_forward(w, b, x), so ∂E/∂y = c.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = Matrix::random_normal(4, 3, 1.0, &mut rng);
        let x = Matrix::random_normal(4, 5, 1.0, &mut rng);
        let c = Matrix::random_normal(3, 5, 1.0, &mut rng);
        let b = vec![0.2, 0.0, -0.4];
        let energy = |w: &Matrix, b: &[f64], x: &Matrix| -> f64 {
            let y = fc_forward(w, Some(b), x).unwrap();
            y.hadamard(&c).unwrap().as_slice().iter().sum()
        };
        let grads = fc_backward(&w, &x, &c).unwrap();
        let h = 1e-5;
        let rel = |fd: f64, an: f64| (fd - an).abs() / fd.abs().max(an.abs()).max(1e-8);
        for i in 0..4 {
            for j in 0..3 {
                let (mut wp, mut wm) = (w.clone(), w.clone());
                wp.set(i, j, w.get(i, j) + h);
                wm.set(i, j, w.get(i, j) - h);
                let fd = (energy(&wp, &b, &x) - energy(&wm, &b, &x)) / (2.0 * h);
                assert!(rel(fd, grads.weights.get(i, j)) < 1e-6);
            }
        }
        for i in 0..4 {
            for k in 0..5 {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp.set(i, k, x.get(i, k) + h);
                xm.set(i, k, x.get(i, k) - h);
                let fd = (energy(&w, &b, &xp) - energy(&w, &b, &xm)) / (2.0 * h);
                assert!(rel(fd, grads.input.get(i, k)) < 1e-6);
            }
        }
        for j in 0..3 {
            let (mut bp, mut bm) = (b.clone(), b.clone());
            bp[j] += h;
            bm[j] -= h;
            let fd = (energy(&w, &bp, &x) - energy(&w, &bm, &x)) / (2.0 * h);
            assert!(rel(fd, grads.bias[j]) < 1e-6);
        }
    }

    #[test]
    fn activation_values() {
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
        assert_eq!(Activation::Sigmoid.derivative(0.0), 0.25);
        assert_eq!(Activation::Relu.apply(-3.0), 0.0);
        assert_eq!(Activation::Relu.derivative(-3.0), 0.0);
        assert_eq!(Activation::Relu.derivative(0.0), 0.0);
        assert_eq!(Activation::Relu.derivative(2.0), 1.0);
    }

    #[test]
    fn tanh_backward_matches_finite_differences() {
        let z = Matrix::from_rows(&[&[-1.3, 0.0, 0.4], &[2.2, -0.1, 0.9]]).unwrap();
        let up = Matrix::from_rows(&[&[1.0, -2.0, 0.5], &[0.3, 1.0, -1.0]]).unwrap();
        let back = activation_backward(Activation::Tanh, &z, &up).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            for j in 0..3 {
                let fd = ((z.get(i, j) + h).tanh() - (z.get(i, j) - h).tanh()) / (2.0 * h);
                assert!((back.get(i, j) - up.get(i, j) * fd).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn noncompact_layer_shape() {
        let layers = build_noncompact_stiefel_layer(5, 2, Activation::Tanh).unwrap();
        assert_eq!(layers.len(), 3);
        assert!(!layers[0].has_bias());
        assert!(layers[1].has_bias());
        assert!(build_noncompact_stiefel_layer(2, 3, Activation::Tanh).is_err());
    }
}
