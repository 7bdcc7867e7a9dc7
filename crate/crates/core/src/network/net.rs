use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifold::ManifoldKind;
use crate::network::layer::{
    activation_backward, activation_forward, fc_backward, fc_forward, transposed_fc_backward,
    transposed_fc_forward, LayerSpec, ParamState,
};
use crate::network::loss::{accuracy, mse_reconstruction_loss, softmax_ce_loss, LossKind, Target};

/// A feed-forward network: the ordered layers plus the loss on the final
/// output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    pub loss: LossKind,
}

/// Parameters of every layer, indexed like [`NetworkSpec::layers`]. Layers
/// without weights (activations, tied decoders) hold `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    layers: Vec<Option<ParamState>>,
    version: u64,
}

impl Params {
    pub fn new(layers: Vec<Option<ParamState>>) -> Self {
        Self { layers, version: 0 }
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layer(&self, i: usize) -> Option<&ParamState> {
        self.layers.get(i).and_then(Option::as_ref)
    }

    /// Mutable access bumps the version, which invalidates forward caches.
    pub fn layer_mut(&mut self, i: usize) -> Option<&mut ParamState> {
        self.version += 1;
        self.layers.get_mut(i).and_then(Option::as_mut)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &ParamState)> {
        self.layers
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_ref().map(|p| (i, p)))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (usize, &mut ParamState)> {
        self.version += 1;
        self.layers
            .iter_mut()
            .enumerate()
            .filter_map(|(i, p)| p.as_mut().map(|p| (i, p)))
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub(crate) fn into_layers(self) -> Vec<Option<ParamState>> {
        self.layers
    }

    /// Largest constraint defect over the manifold-constrained weights.
    pub fn max_defect(&self) -> f64 {
        self.iter()
            .filter(|(_, p)| p.manifold.kind().is_constrained())
            .map(|(_, p)| p.defect())
            .fold(0.0, f64::max)
    }

    /// Total number of stored scalars (weights and biases).
    pub fn stored_parameter_count(&self) -> usize {
        self.iter()
            .map(|(_, p)| p.weights.rows() * p.weights.cols() + p.bias.as_ref().map_or(0, Vec::len))
            .sum()
    }
}

/// Layer inputs recorded by a forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[k]` is the input of layer `k`; the last entry is the network
    /// output.
    pub activations: Vec<Matrix>,
    params_version: u64,
}

impl ForwardCache {
    pub fn output(&self) -> &Matrix {
        self.activations
            .last()
            .expect("at least the input is cached")
    }

    pub fn batch_size(&self) -> usize {
        self.output().cols()
    }
}

/// Raw Euclidean gradient of one parameterized layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad {
    pub weights: Matrix,
    pub bias: Option<Vec<f64>>,
}

pub type Gradients = Vec<Option<ParamGrad>>;

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>, loss: LossKind) -> Result<Self> {
        let spec = Self { layers, loss };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Input("network has no layers".into()));
        }
        for (k, pair) in self.layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dim(
                    "NetworkSpec",
                    format!(
                        "layer {k} outputs {} but layer {} expects {}",
                        pair[0].out_dim(),
                        k + 1,
                        pair[1].in_dim()
                    ),
                ));
            }
        }
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.in_dim() == 0 || layer.out_dim() == 0 {
                return Err(Error::dim(
                    "NetworkSpec",
                    format!("layer {k} has a zero dimension"),
                ));
            }
            layer.weight_manifold()?;
            if let LayerSpec::TransposedFc {
                in_dim,
                out_dim,
                bias,
                tied_to: Some(src),
                ..
            } = *layer
            {
                let ok = src < k
                    && matches!(
                        self.layers[src],
                        LayerSpec::FullyConnected { in_dim: n, out_dim: p, .. } if n == out_dim && p == in_dim
                    );
                if !ok || bias {
                    return Err(Error::Input(format!(
                        "layer {k} must tie to an earlier {out_dim}->{in_dim} fully-connected layer and have no bias"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, LayerSpec::out_dim)
    }

    /// Initial parameters: random manifold points for constrained weights,
    /// Gaussian with standard deviation `1/√fan_in` for Euclidean weights,
    /// ones for diagonal scales, zero biases.
    pub fn init_params(&self, seed: u64) -> Result<Params> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let layer_seed = seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(k as u64 + 1);
            let state = match layer.weight_manifold()? {
                None => None,
                Some(manifold) => {
                    let weights = match layer {
                        LayerSpec::DiagonalScale { dim, .. } => {
                            Matrix::from_fn(*dim, 1, |_, _| 1.0)
                        }
                        _ if manifold.kind() == ManifoldKind::Euclidean => {
                            let (n, p) = manifold.shape();
                            let fan_in = layer.in_dim() as f64;
                            let mut rng =
                                <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(
                                    layer_seed,
                                );
                            Matrix::random_normal(n, p, 1.0 / fan_in.sqrt(), &mut rng)
                        }
                        _ => manifold.random_point(layer_seed),
                    };
                    let bias = layer.has_bias().then(|| vec![0.0; layer.out_dim()]);
                    Some(ParamState::new(weights, manifold, bias)?)
                }
            };
            layers.push(state);
        }
        Ok(Params::new(layers))
    }

    fn check_params(&self, params: &Params) -> Result<()> {
        if params.len() != self.layers.len() {
            return Err(Error::Usage(format!(
                "{} parameter slots for {} layers",
                params.len(),
                self.layers.len()
            )));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            let expected = layer.weight_manifold()?.map(|m| m.shape());
            let actual = params.layer(k).map(|p| p.weights.shape());
            if expected != actual {
                return Err(Error::Usage(format!(
                    "layer {k}: expected weights {expected:?}, found {actual:?}"
                )));
            }
        }
        Ok(())
    }

    fn weights_for<'a>(&self, params: &'a Params, k: usize) -> &'a ParamState {
        let src = self.layers[k].tied_to().unwrap_or(k);
        params.layer(src).expect("validated parameter layout")
    }

    /// Runs every layer on the batch `x` (`input_dim × B`) and caches inputs.
    pub fn forward(&self, params: &Params, x: &Matrix) -> Result<ForwardCache> {
        self.check_params(params)?;
        if x.rows() != self.input_dim() {
            return Err(Error::dim(
                "forward",
                format!(
                    "input has {} rows, network expects {}",
                    x.rows(),
                    self.input_dim()
                ),
            ));
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.clone());
        for (k, layer) in self.layers.iter().enumerate() {
            let input = activations.last().expect("non-empty");
            let out = match layer {
                LayerSpec::FullyConnected { .. } => {
                    let p = self.weights_for(params, k);
                    fc_forward(&p.weights, p.bias.as_deref(), input)?
                }
                LayerSpec::TransposedFc { .. } => {
                    let p = self.weights_for(params, k);
                    let bias = if layer.tied_to().is_some() {
                        None
                    } else {
                        p.bias.as_deref()
                    };
                    transposed_fc_forward(&p.weights, bias, input)?
                }
                LayerSpec::DiagonalScale { .. } => {
                    let p = self.weights_for(params, k);
                    let mut y = input.scale_rows(p.weights.as_slice())?;
                    if let Some(b) = &p.bias {
                        y.add_to_rows(b)?;
                    }
                    y
                }
                LayerSpec::Activation { activation, .. } => activation_forward(*activation, input),
            };
            activations.push(out);
        }
        Ok(ForwardCache {
            activations,
            params_version: params.version(),
        })
    }

    /// Loss value and `∂E/∂output` for the cached output.
    pub fn loss(&self, cache: &ForwardCache, target: Target<'_>) -> Result<(f64, Matrix)> {
        match (self.loss, target) {
            (LossKind::MseReconstruction, Target::Values(t)) => {
                mse_reconstruction_loss(cache.output(), t)
            }
            (LossKind::SoftmaxCrossEntropy, Target::Labels(l)) => {
                softmax_ce_loss(cache.output(), l)
            }
            (kind, _) => Err(Error::Usage(format!(
                "target kind does not match loss {kind:?}"
            ))),
        }
    }

    /// Reverse-mode pass producing the raw Euclidean gradient of every
    /// parameterized layer. Tied layers add their weight gradient to the
    /// layer they borrow from.
    pub fn backward(
        &self,
        params: &Params,
        cache: &ForwardCache,
        loss_grad: &Matrix,
    ) -> Result<Gradients> {
        self.check_params(params)?;
        if cache.activations.len() != self.layers.len() + 1 {
            return Err(Error::Usage(
                "activation cache does not match the network".into(),
            ));
        }
        if cache.params_version != params.version() {
            return Err(Error::Usage(
                "activation cache is stale: parameters changed after the forward pass".into(),
            ));
        }
        if loss_grad.shape() != cache.output().shape() {
            return Err(Error::dim(
                "backward",
                format!(
                    "loss gradient {:?} vs output {:?}",
                    loss_grad.shape(),
                    cache.output().shape()
                ),
            ));
        }

        let mut grads: Gradients = vec![None; self.layers.len()];
        let mut upstream = loss_grad.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.activations[k];
            upstream = match layer {
                LayerSpec::FullyConnected { .. } => {
                    let p = self.weights_for(params, k);
                    let g = fc_backward(&p.weights, input, &upstream)?;
                    accumulate(&mut grads, k, g.weights, p.bias.as_ref().map(|_| g.bias))?;
                    g.input
                }
                LayerSpec::TransposedFc { tied_to, .. } => {
                    let p = self.weights_for(params, k);
                    let g = transposed_fc_backward(&p.weights, input, &upstream)?;
                    match tied_to {
                        Some(src) => accumulate(&mut grads, *src, g.weights, None)?,
                        None => {
                            accumulate(&mut grads, k, g.weights, p.bias.as_ref().map(|_| g.bias))?
                        }
                    }
                    g.input
                }
                LayerSpec::DiagonalScale { dim, .. } => {
                    let p = self.weights_for(params, k);
                    let gw = Matrix::from_fn(*dim, 1, |i, _| {
                        (0..input.cols())
                            .map(|b| upstream.get(i, b) * input.get(i, b))
                            .sum()
                    });
                    let gb = p.bias.as_ref().map(|_| upstream.row_sums());
                    accumulate(&mut grads, k, gw, gb)?;
                    upstream.scale_rows(p.weights.as_slice())?
                }
                LayerSpec::Activation { activation, .. } => {
                    activation_backward(*activation, input, &upstream)?
                }
            };
        }
        Ok(grads)
    }

    /// Loss (and accuracy for classification) of `params` on a full batch.
    pub fn evaluate(
        &self,
        params: &Params,
        x: &Matrix,
        target: Target<'_>,
    ) -> Result<(f64, Option<f64>)> {
        let cache = self.forward(params, x)?;
        let (loss, _) = self.loss(&cache, target)?;
        let acc = match target {
            Target::Labels(l) => Some(accuracy(cache.output(), l)),
            Target::Values(_) => None,
        };
        Ok((loss, acc))
    }

    /// Forward, loss and backward on one batch.
    pub fn loss_and_gradients(
        &self,
        params: &Params,
        x: &Matrix,
        target: Target<'_>,
    ) -> Result<(f64, Gradients, ForwardCache)> {
        let cache = self.forward(params, x)?;
        let (loss, loss_grad) = self.loss(&cache, target)?;
        let grads = self.backward(params, &cache, &loss_grad)?;
        Ok((loss, grads, cache))
    }
}

fn accumulate(
    grads: &mut Gradients,
    k: usize,
    weights: Matrix,
    bias: Option<Vec<f64>>,
) -> Result<()> {
    match &mut grads[k] {
        Some(existing) => {
            existing.weights.axpy(1.0, &weights)?;
            if let (Some(eb), Some(b)) = (&mut existing.bias, bias) {
                eb.iter_mut().zip(b).for_each(|(e, v)| *e += v);
            }
        }
        slot @ None => *slot = Some(ParamGrad { weights, bias }),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matmul_nt, matmul_tn};
    use crate::network::layer::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chain_mismatch_is_rejected() {
        let layers = vec![
            LayerSpec::fc(4, 3, ManifoldKind::Euclidean, true),
            LayerSpec::activation(2, Activation::Tanh),
        ];
        assert!(NetworkSpec::new(layers, LossKind::MseReconstruction).is_err());
    }

    #[test]
    fn linear_layer_matches_least_squares_gradient() {
        let spec = NetworkSpec::new(
            vec![LayerSpec::fc(4, 3, ManifoldKind::Euclidean, false)],
            LossKind::MseReconstruction,
        )
        .unwrap();
        let params = spec.init_params(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Matrix::random_normal(4, 6, 1.0, &mut rng);
        let t = Matrix::random_normal(3, 6, 1.0, &mut rng);
        let (_, grads, _) = spec
            .loss_and_gradients(&params, &x, Target::Values(&t))
            .unwrap();

        // E = (1/B)‖WᵀX − T‖²  ⇒  ∂E/∂W = (2/B) X (WᵀX − T)ᵀ
        let w = &params.layer(0).unwrap().weights;
        let resid = matmul_tn(w, &x).unwrap().sub(&t).unwrap();
        let expected = matmul_nt(&x, &resid).unwrap().scale(2.0 / 6.0);
        let got = &grads[0].as_ref().unwrap().weights;
        assert!(got.sub(&expected).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn zero_loss_gives_zero_gradients() {
        let spec = NetworkSpec::new(
            vec![
                LayerSpec::fc(3, 3, ManifoldKind::Stiefel, false),
                LayerSpec::tied(3, 3, 0),
            ],
            LossKind::MseReconstruction,
        )
        .unwrap();
        let params = spec.init_params(1).unwrap();
        let x = Matrix::random_normal(3, 4, 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        let (loss, grads, _) = spec
            .loss_and_gradients(&params, &x, Target::Values(&x))
            .unwrap();
        assert!(loss < 1e-28);
        assert!(grads[0].as_ref().unwrap().weights.max_abs() < 1e-13);
        assert!(grads[1].is_none());
    }

    #[test]
    fn stale_cache_is_a_usage_error() {
        let spec = NetworkSpec::new(
            vec![LayerSpec::fc(2, 2, ManifoldKind::Euclidean, true)],
            LossKind::MseReconstruction,
        )
        .unwrap();
        let mut params = spec.init_params(0).unwrap();
        let x = Matrix::identity(2);
        let cache = spec.forward(&params, &x).unwrap();
        let (_, g) = spec.loss(&cache, Target::Values(&x)).unwrap();
        params.layer_mut(0).unwrap().weights.set(0, 0, 0.5);
        assert!(matches!(
            spec.backward(&params, &cache, &g),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn noncompact_pre_activation_by_hand() {
        let layers =
            crate::network::build_noncompact_stiefel_layer(2, 1, Activation::Identity).unwrap();
        let spec = NetworkSpec::new(layers, LossKind::MseReconstruction).unwrap();
        let mut params = spec.init_params(0).unwrap();
        params.layer_mut(0).unwrap().weights = Matrix::column_vector(&[1.0, 0.0]);
        params.layer_mut(1).unwrap().weights = Matrix::column_vector(&[3.0]);
        let x = Matrix::column_vector(&[5.0, 7.0]);
        let cache = spec.forward(&params, &x).unwrap();
        assert_eq!(cache.output().get(0, 0), 15.0);
    }

    #[test]
    fn bad_tie_is_rejected() {
        let layers = vec![
            LayerSpec::fc(4, 2, ManifoldKind::Stiefel, false),
            LayerSpec::tied(2, 3, 0),
        ];
        assert!(NetworkSpec::new(layers, LossKind::MseReconstruction).is_err());
    }
}
