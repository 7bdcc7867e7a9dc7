//! Declarative experiment configuration (TOML).
//!
//! Every key is optional; omitted keys take the defaults listed in
//! [`CONFIG_REFERENCE`]. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::ManifoldKind;
use crate::network::Activation;
use crate::optim::OptimizerConfig;

/// Human-readable description of every configuration key and its default.
pub const CONFIG_REFERENCE: &str = r#"Configuration keys (TOML). All keys are optional.

experiment = "pca_recovery"      pca_recovery | autoencoder | lowrank_simplify | train_generic

[data]
source = "synthetic-gaussian"    synthetic-gaussian | gaussian-mixture | teacher | csv-file
n = 16                           feature dimension (synthetic sources)
samples = 2000                   number of samples (synthetic sources)
spectrum = [..]                  covariance eigenvalues, length n, all > 0
                                 (default: p leading values p+3, .., 4 then 1.5·0.85^k)
classes = 4                      classes for gaussian-mixture / teacher
teacher_rank = 8                 rank of the teacher map (teacher)
separation = 3.0                 scale of the class centers (gaussian-mixture)
path = "data.csv"                csv-file: one sample per row, no header
labels = false                   csv-file: last column is an integer label
holdout = 0.2                    fraction of samples held out for evaluation
seed = 1                         data-generation seed

[model]
rank = 4                         pca_recovery: subspace dimension p;
                                 autoencoder: code width
variant = "odae"                 autoencoder: dae | odae | o2dae
activation = "sigmoid"           autoencoder encoder activation: sigmoid | tanh | relu | identity
noise = 0.1                      autoencoder: denoising std as a fraction of per-feature std
layers = [..]                    train_generic: list of { out_dim, manifold = "euclidean",
                                 bias = true, activation = "identity" }
                                 (default: one 48-wide tanh layer, then a linear classifier)
snapshot = "network.json"        lowrank_simplify: network produced by train_generic
layer = 0                        lowrank_simplify: index of the layer to factorize
energy = 60.0                    lowrank_simplify: percent of squared singular-value energy kept
explicit_rank = 8                lowrank_simplify: fixed rank (overrides energy)
finetune_epochs = 20             lowrank_simplify: fine-tuning epochs after surgery

[optimizer]
method = "gbp"                   bp | gbp | pgd
lr_start = 0.05
lr_end = 0.001
schedule = "log-linear"          constant | log-linear | linear
momentum = 0.0                   in [0, 1]
weight_decay = 0.0               applied to Euclidean weights and biases only
epochs = 200
batch_size = 50
seed = 7                         initialization, shuffling and noise seed

[output]
dir = "runs"                     where CSVs, the manifest and snapshots go
"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PcaRecovery,
    Autoencoder,
    LowrankSimplify,
    TrainGeneric,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PcaRecovery => "pca_recovery",
            ExperimentKind::Autoencoder => "autoencoder",
            ExperimentKind::LowrankSimplify => "lowrank_simplify",
            ExperimentKind::TrainGeneric => "train_generic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    SyntheticGaussian,
    GaussianMixture,
    Teacher,
    CsvFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub source: DataSource,
    pub n: usize,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<f64>>,
    pub classes: usize,
    pub teacher_rank: usize,
    pub separation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub labels: bool,
    pub holdout: f64,
    pub seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::SyntheticGaussian,
            n: 16,
            samples: 2000,
            spectrum: None,
            classes: 4,
            teacher_rank: 8,
            separation: 3.0,
            path: None,
            labels: false,
            holdout: 0.2,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoencoderVariant {
    /// Unconstrained encoder and decoder.
    Dae,
    /// Stiefel encoder.
    Odae,
    /// Stiefel encoder and decoder.
    O2dae,
}

impl AutoencoderVariant {
    pub fn manifolds(self) -> (ManifoldKind, ManifoldKind) {
        match self {
            AutoencoderVariant::Dae => (ManifoldKind::Euclidean, ManifoldKind::Euclidean),
            AutoencoderVariant::Odae => (ManifoldKind::Stiefel, ManifoldKind::Euclidean),
            AutoencoderVariant::O2dae => (ManifoldKind::Stiefel, ManifoldKind::Stiefel),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub out_dim: usize,
    #[serde(default = "default_manifold")]
    pub manifold: ManifoldKind,
    #[serde(default = "default_true")]
    pub bias: bool,
    #[serde(default = "default_activation")]
    pub activation: Activation,
}

fn default_manifold() -> ManifoldKind {
    ManifoldKind::Euclidean
}

fn default_true() -> bool {
    true
}

fn default_activation() -> Activation {
    Activation::Identity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub rank: usize,
    pub variant: AutoencoderVariant,
    pub activation: Activation,
    pub noise: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<LayerConfig>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
    pub layer: usize,
    pub energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explicit_rank: Option<usize>,
    pub finetune_epochs: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            rank: 4,
            variant: AutoencoderVariant::Odae,
            activation: Activation::Sigmoid,
            noise: 0.1,
            layers: None,
            snapshot: None,
            layer: 0,
            energy: 60.0,
            explicit_rank: None,
            finetune_epochs: 20,
        }
    }
}

impl ModelConfig {
    /// Hidden layers for `train_generic`, given the number of outputs.
    pub fn generic_layers(&self, outputs: usize) -> Vec<LayerConfig> {
        self.layers.clone().unwrap_or_else(|| {
            vec![
                LayerConfig {
                    out_dim: 48,
                    manifold: ManifoldKind::Euclidean,
                    bias: true,
                    activation: Activation::Tanh,
                },
                LayerConfig {
                    out_dim: outputs,
                    manifold: ManifoldKind::Euclidean,
                    bias: true,
                    activation: Activation::Identity,
                },
            ]
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::PcaRecovery,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            optimizer: OptimizerConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        self.optimizer.validate()?;
        let d = &self.data;
        if d.source != DataSource::CsvFile && (d.n == 0 || d.samples < 2) {
            return fail("data.n must be positive and data.samples at least 2".into());
        }
        if let Some(spec) = &d.spectrum {
            if spec.len() != d.n {
                return fail(format!(
                    "data.spectrum has {} entries but data.n = {}",
                    spec.len(),
                    d.n
                ));
            }
            if let Some(bad) = spec.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return fail(format!(
                    "data.spectrum entries must be positive, found {bad}"
                ));
            }
        }
        if d.source == DataSource::CsvFile {
            match &d.path {
                None => return fail("data.source = \"csv-file\" needs data.path".into()),
                Some(p) if !p.is_file() => {
                    return fail(format!("data.path {} does not exist", p.display()))
                }
                Some(_) => {}
            }
        }
        if matches!(d.source, DataSource::GaussianMixture | DataSource::Teacher) && d.classes < 2 {
            return fail("data.classes must be at least 2".into());
        }
        if d.source == DataSource::Teacher && d.teacher_rank == 0 {
            return fail("data.teacher_rank must be positive".into());
        }
        if !(0.0..1.0).contains(&d.holdout) {
            return fail(format!("data.holdout {} outside [0, 1)", d.holdout));
        }
        let m = &self.model;
        if m.rank == 0 {
            return fail("model.rank must be positive".into());
        }
        if !(m.noise >= 0.0 && m.noise.is_finite()) {
            return fail(format!("model.noise {} must be nonnegative", m.noise));
        }
        if !(m.energy > 0.0 && m.energy <= 100.0) {
            return fail(format!("model.energy {} outside (0, 100]", m.energy));
        }
        if m.explicit_rank == Some(0) {
            return fail("model.explicit_rank must be positive".into());
        }
        if let Some(layers) = &m.layers {
            if layers.is_empty() || layers.iter().any(|l| l.out_dim == 0) {
                return fail("model.layers must be non-empty with positive out_dim".into());
            }
        }
        let needs_rank_le_n = matches!(
            self.experiment,
            ExperimentKind::PcaRecovery | ExperimentKind::Autoencoder
        );
        if needs_rank_le_n && d.source != DataSource::CsvFile && m.rank > d.n {
            return fail(format!("model.rank {} exceeds data.n {}", m.rank, d.n));
        }
        Ok(())
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::from_toml(&text)
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(e))))
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}
