//! Training a network assembled from `model.layers`.

use crate::error::{Error, Result};
use crate::experiments::config::{ExperimentConfig, LayerConfig};
use crate::experiments::data::{build_dataset, class_count};
use crate::experiments::metrics::Summary;
use crate::network::{Activation, LayerSpec, LossKind, NetworkSpec, Params};
use crate::optim::{train, Dataset, MetricsRecord, Targets};

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub spec: NetworkSpec,
    pub params: Params,
    pub records: Vec<MetricsRecord>,
    pub test_loss: f64,
    pub test_accuracy: Option<f64>,
}

impl TrainReport {
    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        if let Some(last) = self.records.last() {
            s.real("train_loss", last.loss);
        }
        s.real("test_loss", self.test_loss);
        if let Some(a) = self.test_accuracy {
            s.real("test_accuracy", a);
        }
        s.int("stored_parameters", self.params.stored_parameter_count());
        s
    }
}

/// Expands layer configs into FC layers, each followed by its activation
/// unless it is the identity.
pub fn build_network(
    input_dim: usize,
    layers: &[LayerConfig],
    loss: LossKind,
) -> Result<NetworkSpec> {
    let mut specs = Vec::new();
    let mut dim = input_dim;
    for l in layers {
        specs.push(LayerSpec::fc(dim, l.out_dim, l.manifold, l.bias));
        if l.activation != Activation::Identity {
            specs.push(LayerSpec::activation(l.out_dim, l.activation));
        }
        dim = l.out_dim;
    }
    NetworkSpec::new(specs, loss)
}

/// Loss implied by the dataset: cross-entropy for labels, reconstruction
/// otherwise.
pub fn loss_for(data: &Dataset) -> LossKind {
    match data.targets {
        Targets::Labels(_) => LossKind::SoftmaxCrossEntropy,
        _ => LossKind::MseReconstruction,
    }
}

pub fn run_train_generic(config: &ExperimentConfig) -> Result<TrainReport> {
    let data = build_dataset(&config.data, config.model.rank)?;
    let n = data.inputs.rows();
    let outputs = class_count(&data).unwrap_or(n);
    let layers = config.model.generic_layers(outputs);
    let spec = build_network(n, &layers, loss_for(&data))?;
    if spec.output_dim() != outputs {
        return Err(Error::Config(format!(
            "the last layer has {} outputs, the data needs {outputs}",
            spec.output_dim()
        )));
    }
    let (train_set, test_set) = data.split(config.data.holdout);
    let init = spec.init_params(config.optimizer.seed)?;
    let (params, records) = train(&spec, init, &train_set, &config.optimizer, |_| {})?;
    let eval = if test_set.is_empty() {
        &train_set
    } else {
        &test_set
    };
    let (test_loss, test_accuracy) = spec.evaluate(&params, &eval.inputs, eval.target())?;
    Ok(TrainReport {
        spec,
        params,
        records,
        test_loss,
        test_accuracy,
    })
}
