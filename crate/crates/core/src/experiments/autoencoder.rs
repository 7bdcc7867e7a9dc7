//! Denoising autoencoders with optionally orthonormal encoder and decoder.

use crate::error::{Error, Result};
use crate::experiments::config::{AutoencoderVariant, ExperimentConfig};
use crate::experiments::data::build_dataset;
use crate::experiments::metrics::Summary;
use crate::linalg::Matrix;
use crate::manifold::stiefel_defect;
use crate::network::{
    activation_forward, fc_forward, Activation, LayerSpec, LossKind, NetworkSpec, Params, Target,
};
use crate::optim::{train_with, Dataset, MetricsRecord, Targets, TrainOptions};

#[derive(Debug, Clone)]
pub struct AutoencoderReport {
    pub variant: AutoencoderVariant,
    pub records: Vec<MetricsRecord>,
    /// `(encoder, decoder)` feasibility defect after each epoch, for the
    /// constrained ones.
    pub epoch_defects: Vec<(Option<f64>, Option<f64>)>,
    /// Clean reconstruction loss on the training split.
    pub train_loss: f64,
    /// Clean reconstruction loss on the held-out split.
    pub test_loss: f64,
    /// Nearest-centroid accuracy of encoder outputs on the held-out split,
    /// when the data is labeled.
    pub probe_accuracy: Option<f64>,
    pub encoder_defect: f64,
    pub decoder_defect: f64,
    pub spec: NetworkSpec,
    pub params: Params,
}

impl AutoencoderReport {
    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        s.text("variant", &format!("{:?}", self.variant).to_lowercase());
        s.real("train_loss", self.train_loss);
        s.real("test_loss", self.test_loss);
        if let Some(a) = self.probe_accuracy {
            s.real("probe_accuracy", a);
        }
        s.real("encoder_defect", self.encoder_defect);
        s.real("decoder_defect", self.decoder_defect);
        s
    }
}

/// `FC(n→h) → activation → TransposedFc(h→n)`, both with bias.
pub fn autoencoder_network(
    n: usize,
    hidden: usize,
    variant: AutoencoderVariant,
    activation: Activation,
) -> Result<NetworkSpec> {
    let (enc, dec) = variant.manifolds();
    NetworkSpec::new(
        vec![
            LayerSpec::fc(n, hidden, enc, true),
            LayerSpec::activation(hidden, activation),
            LayerSpec::transposed(hidden, n, dec, true),
        ],
        LossKind::MseReconstruction,
    )
}

pub fn run_autoencoder(config: &ExperimentConfig) -> Result<AutoencoderReport> {
    let model = &config.model;
    let data = build_dataset(&config.data, model.rank)?;
    let n = data.inputs.rows();
    if model.rank > n {
        return Err(Error::Config(format!(
            "model.rank {} exceeds {n} features",
            model.rank
        )));
    }
    let (train_set, test_set) = data.split(config.data.holdout);
    let recon = |d: &Dataset| Dataset {
        inputs: d.inputs.clone(),
        targets: Targets::Reconstruction,
    };

    let spec = autoencoder_network(n, model.rank, model.variant, model.activation)?;
    let init = spec.init_params(config.optimizer.seed)?;
    let options = TrainOptions {
        input_noise: (model.noise > 0.0).then(|| {
            feature_std(&train_set.inputs)
                .into_iter()
                .map(|s| model.noise * s)
                .collect()
        }),
    };
    let mut epoch_defects = Vec::new();
    let (params, records) = train_with(
        &spec,
        init,
        &recon(&train_set),
        &config.optimizer,
        &options,
        &mut |report| {
            let of = |layer: usize| report.defects.iter().find(|d| d.0 == layer).map(|d| d.1);
            epoch_defects.push((of(0), of(2)));
        },
    )?;

    let enc = params.layer(0).expect("encoder");
    let dec = params.layer(2).expect("decoder");
    let (train_loss, _) = spec.evaluate(
        &params,
        &train_set.inputs,
        Target::Values(&train_set.inputs),
    )?;
    let test_loss = if test_set.is_empty() {
        train_loss
    } else {
        spec.evaluate(&params, &test_set.inputs, Target::Values(&test_set.inputs))?
            .0
    };
    let probe_accuracy = match (&train_set.targets, &test_set.targets) {
        (Targets::Labels(tr), Targets::Labels(te)) if !te.is_empty() => {
            let code = |x: &Matrix| -> Result<Matrix> {
                let z = fc_forward(&enc.weights, enc.bias.as_deref(), x)?;
                Ok(activation_forward(model.activation, &z))
            };
            Some(nearest_centroid_accuracy(
                &code(&train_set.inputs)?,
                tr,
                &code(&test_set.inputs)?,
                te,
            ))
        }
        _ => None,
    };
    Ok(AutoencoderReport {
        variant: model.variant,
        records,
        epoch_defects,
        train_loss,
        test_loss,
        probe_accuracy,
        encoder_defect: stiefel_defect(&enc.weights),
        decoder_defect: stiefel_defect(&dec.weights),
        spec,
        params,
    })
}

/// Per-row standard deviation.
pub fn feature_std(x: &Matrix) -> Vec<f64> {
    let means = x.row_means();
    let cols = x.cols() as f64;
    (0..x.rows())
        .map(|i| {
            let m = means[i];
            (x.row(i).iter().map(|v| (v - m) * (v - m)).sum::<f64>() / cols).sqrt()
        })
        .collect()
}

/// Classifies each test column by the closest class mean of the training
/// columns.
pub fn nearest_centroid_accuracy(
    train: &Matrix,
    train_labels: &[usize],
    test: &Matrix,
    test_labels: &[usize],
) -> f64 {
    let classes = train_labels
        .iter()
        .chain(test_labels)
        .max()
        .map_or(0, |m| m + 1);
    let d = train.rows();
    let mut centroids = vec![vec![0.0; d]; classes];
    let mut counts = vec![0usize; classes];
    for (j, &c) in train_labels.iter().enumerate() {
        counts[c] += 1;
        for (i, v) in centroids[c].iter_mut().enumerate() {
            *v += train.get(i, j);
        }
    }
    for (c, centroid) in centroids.iter_mut().enumerate() {
        if counts[c] > 0 {
            centroid.iter_mut().for_each(|v| *v /= counts[c] as f64);
        }
    }
    let mut correct = 0usize;
    for (j, &label) in test_labels.iter().enumerate() {
        let best = (0..classes).filter(|&c| counts[c] > 0).min_by(|&a, &b| {
            let dist = |c: usize| -> f64 {
                (0..d)
                    .map(|i| (test.get(i, j) - centroids[c][i]).powi(2))
                    .sum()
            };
            dist(a).total_cmp(&dist(b))
        });
        if best == Some(label) {
            correct += 1;
        }
    }
    correct as f64 / test_labels.len() as f64
}
