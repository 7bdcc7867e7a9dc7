use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::manifold::ManifoldKind;
use crate::network::{NetworkSpec, ParamGrad, ParamState, Params, Target};
use crate::optim::config::{Method, OptimizerConfig};
use crate::optim::step::{bias_step, bp_step, gbp_step, pgd_step};

/// Steps between re-orthonormalizations of gBP-trained constrained weights.
pub const REFEASIBILIZE_EVERY: usize = 1000;

/// Training data: samples are the columns of `inputs`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Matrix,
    pub targets: Targets,
}

#[derive(Debug, Clone)]
pub enum Targets {
    /// The (clean) input is its own target.
    Reconstruction,
    Values(Matrix),
    Labels(Vec<usize>),
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn target(&self) -> Target<'_> {
        match &self.targets {
            Targets::Reconstruction => Target::Values(&self.inputs),
            Targets::Values(v) => Target::Values(v),
            Targets::Labels(l) => Target::Labels(l),
        }
    }

    fn gather(&self, idx: &[usize]) -> (Matrix, Targets) {
        let x = self.inputs.select_columns(idx);
        let t = match &self.targets {
            Targets::Reconstruction => Targets::Values(x.clone()),
            Targets::Values(v) => Targets::Values(v.select_columns(idx)),
            Targets::Labels(l) => Targets::Labels(idx.iter().map(|&i| l[i]).collect()),
        };
        (x, t)
    }

    /// Splits off the trailing `fraction` of samples.
    pub fn split(&self, fraction: f64) -> (Dataset, Dataset) {
        let n = self.len();
        let held = ((n as f64) * fraction).round() as usize;
        let cut = n - held.min(n.saturating_sub(1));
        let head: Vec<usize> = (0..cut).collect();
        let tail: Vec<usize> = (cut..n).collect();
        let make = |idx: &[usize]| {
            let (inputs, targets) = self.gather(idx);
            let targets = match (&self.targets, targets) {
                (Targets::Reconstruction, _) => Targets::Reconstruction,
                (_, t) => t,
            };
            Dataset { inputs, targets }
        };
        (make(&head), make(&tail))
    }
}

/// One per-epoch metrics row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub loss: f64,
    pub feasibility_defect: f64,
    pub lr: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

/// What the per-epoch callback sees.
#[derive(Debug, Clone)]
pub struct EpochReport {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: Option<f64>,
    /// `(layer index, defect)` for each manifold-constrained weight.
    pub defects: Vec<(usize, f64)>,
    pub lr: f64,
}

/// Extra knobs that are not part of the optimizer configuration.
#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    /// Per-feature standard deviation of additive Gaussian input noise used
    /// during training (denoising). Targets stay clean.
    pub input_noise: Option<Vec<f64>>,
}

/// Mini-batch training.
///
/// Each epoch reshuffles the samples with a generator seeded from
/// `config.seed`, runs forward/backward per batch and updates every
/// parameter: constrained weights with the configured method, everything
/// else (Euclidean weights, biases) with the momentum BP rule. Weight decay
/// only touches Euclidean weights and biases.
pub fn train(
    spec: &NetworkSpec,
    params: Params,
    dataset: &Dataset,
    config: &OptimizerConfig,
    mut callback: impl FnMut(&EpochReport),
) -> Result<(Params, Vec<MetricsRecord>)> {
    train_with(
        spec,
        params,
        dataset,
        config,
        &TrainOptions::default(),
        &mut callback,
    )
}

pub fn train_with(
    spec: &NetworkSpec,
    mut params: Params,
    dataset: &Dataset,
    config: &OptimizerConfig,
    options: &TrainOptions,
    callback: &mut dyn FnMut(&EpochReport),
) -> Result<(Params, Vec<MetricsRecord>)> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Input("dataset is empty".into()));
    }
    if dataset.inputs.rows() != spec.input_dim() {
        return Err(Error::dim(
            "train",
            format!(
                "dataset has {} features, network expects {}",
                dataset.inputs.rows(),
                spec.input_dim()
            ),
        ));
    }
    if let Some(noise) = &options.input_noise {
        if noise.len() != spec.input_dim() {
            return Err(Error::dim(
                "train",
                "input noise must have one entry per feature",
            ));
        }
    }

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xa5a5_a5a5_a5a5_a5a5);
    let mut records = Vec::with_capacity(config.epochs);
    let mut step_count = 0usize;

    for epoch in 0..config.epochs {
        let lr = config.lr_at(epoch)?;
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0.0;
        let mut seen = 0usize;

        for chunk in order.chunks(config.batch_size) {
            let (mut x, targets) = dataset.gather(chunk);
            if let Some(noise) = &options.input_noise {
                corrupt(&mut x, noise, &mut noise_rng);
            }
            let target = match &targets {
                Targets::Values(v) => Target::Values(v),
                Targets::Labels(l) => Target::Labels(l),
                Targets::Reconstruction => unreachable!("gather materializes targets"),
            };
            let (loss, grads, cache) = spec.loss_and_gradients(&params, &x, target)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            let b = chunk.len();
            loss_sum += loss * b as f64;
            if let Target::Labels(l) = target {
                correct += crate::network::accuracy(cache.output(), l) * b as f64;
            }
            seen += b;

            step_count += 1;
            let refeasibilize =
                config.method == Method::Gbp && step_count.is_multiple_of(REFEASIBILIZE_EVERY);
            for (k, state) in params.iter_mut() {
                let grad = grads[k]
                    .as_ref()
                    .ok_or_else(|| Error::Usage(format!("no gradient produced for layer {k}")))?;
                update_param(state, grad, lr, config, refeasibilize)?;
            }
        }

        let loss = loss_sum / seen as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        let defects: Vec<(usize, f64)> = params
            .iter()
            .filter(|(_, p)| p.manifold.kind().is_constrained())
            .map(|(k, p)| (k, p.defect()))
            .collect();
        let accuracy = matches!(dataset.targets, Targets::Labels(_)).then(|| correct / seen as f64);
        let report = EpochReport {
            epoch,
            loss,
            accuracy,
            defects,
            lr,
        };
        callback(&report);
        records.push(MetricsRecord {
            epoch,
            loss,
            feasibility_defect: report.defects.iter().map(|d| d.1).fold(0.0, f64::max),
            lr,
            accuracy,
        });
    }
    Ok((params, records))
}

fn corrupt(x: &mut Matrix, noise: &[f64], rng: &mut ChaCha8Rng) {
    let cols = x.cols();
    for (idx, v) in x.as_mut_slice().iter_mut().enumerate() {
        let z: f64 = StandardNormal.sample(rng);
        *v += noise[idx / cols] * z;
    }
}

fn update_param(
    state: &mut ParamState,
    grad: &ParamGrad,
    lr: f64,
    config: &OptimizerConfig,
    refeasibilize: bool,
) -> Result<()> {
    let mu = config.momentum;
    let kind = state.manifold.kind();
    state.weights = match (kind, config.method) {
        (ManifoldKind::Euclidean, method) => {
            let g = with_decay(&grad.weights, &state.weights, config.weight_decay)?;
            if method == Method::Gbp {
                gbp_step(
                    &state.manifold,
                    &state.weights,
                    &g,
                    lr,
                    mu,
                    &mut state.momentum,
                )?
            } else {
                bp_step(&state.weights, &g, lr, mu, &mut state.momentum)?
            }
        }
        (_, Method::Bp) => bp_step(&state.weights, &grad.weights, lr, mu, &mut state.momentum)?,
        (_, Method::Gbp) => {
            let w = gbp_step(
                &state.manifold,
                &state.weights,
                &grad.weights,
                lr,
                mu,
                &mut state.momentum,
            )?;
            if refeasibilize {
                state.manifold.refeasibilize(&w)?
            } else {
                w
            }
        }
        (_, Method::Pgd) => pgd_step(
            &state.manifold,
            &state.weights,
            &grad.weights,
            lr,
            mu,
            &mut state.momentum,
        )?,
    };
    if let (Some(b), Some(gb), Some(tb)) = (&mut state.bias, &grad.bias, &mut state.bias_momentum) {
        let g: Vec<f64> = if config.weight_decay > 0.0 {
            gb.iter()
                .zip(b.iter())
                .map(|(g, v)| g + config.weight_decay * v)
                .collect()
        } else {
            gb.clone()
        };
        bias_step(b, &g, lr, mu, tb)?;
    }
    Ok(())
}

fn with_decay(grad: &Matrix, w: &Matrix, decay: f64) -> Result<Matrix> {
    if decay == 0.0 {
        return Ok(grad.clone());
    }
    let mut g = grad.clone();
    g.axpy(decay, w)?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Activation, LayerSpec, LossKind};

    fn toy() -> (NetworkSpec, Params, Dataset) {
        let spec = NetworkSpec::new(
            vec![
                LayerSpec::fc(5, 3, ManifoldKind::Stiefel, true),
                LayerSpec::activation(3, Activation::Tanh),
                LayerSpec::fc(3, 2, ManifoldKind::Euclidean, true),
            ],
            LossKind::SoftmaxCrossEntropy,
        )
        .unwrap();
        let params = spec.init_params(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Matrix::random_normal(5, 40, 1.0, &mut rng);
        let labels = (0..40).map(|i| usize::from(x.get(0, i) > 0.0)).collect();
        (
            spec,
            params,
            Dataset {
                inputs: x,
                targets: Targets::Labels(labels),
            },
        )
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let (spec, params, data) = toy();
        let config = OptimizerConfig {
            lr_start: 0.0,
            lr_end: 0.0,
            schedule: crate::optim::Schedule::Constant,
            epochs: 3,
            batch_size: 8,
            ..Default::default()
        };
        let (out, records) = train(&spec, params.clone(), &data, &config, |_| {}).unwrap();
        for ((_, a), (_, b)) in params.iter().zip(out.iter()) {
            assert!(a.weights.sub(&b.weights).unwrap().max_abs() < 1e-12);
        }
        assert!((records[0].loss - records[2].loss).abs() < 1e-12);
    }

    #[test]
    fn identical_seeds_give_identical_metrics() {
        let (spec, params, data) = toy();
        let config = OptimizerConfig {
            epochs: 5,
            batch_size: 8,
            momentum: 0.5,
            ..Default::default()
        };
        let (_, a) = train(&spec, params.clone(), &data, &config, |_| {}).unwrap();
        let (_, b) = train(&spec, params, &data, &config, |_| {}).unwrap();
        assert_eq!(a, b);
        assert!(a
            .iter()
            .all(|r| r.feasibility_defect < 1e-8 && r.accuracy.is_some()));
    }

    #[test]
    fn divergence_is_reported() {
        let spec = NetworkSpec::new(
            vec![LayerSpec::fc(2, 2, ManifoldKind::Euclidean, false)],
            LossKind::MseReconstruction,
        )
        .unwrap();
        let params = spec.init_params(0).unwrap();
        let data = Dataset {
            inputs: Matrix::from_rows(&[&[1e3, -2e3], &[3e3, 1e3]]).unwrap(),
            targets: Targets::Reconstruction,
        };
        let config = OptimizerConfig {
            lr_start: 1.0,
            lr_end: 1.0,
            epochs: 200,
            batch_size: 2,
            ..Default::default()
        };
        let err = train(&spec, params, &data, &config, |_| {}).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
        assert_eq!(err.exit_code(), 2);
    }
}
