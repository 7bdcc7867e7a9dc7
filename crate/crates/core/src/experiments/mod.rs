//! Config-driven experiment runners.
//!
//! [`run`] executes one experiment and writes into `output.dir`:
//!
//! | experiment         | files                                              |
//! |--------------------|----------------------------------------------------|
//! | `pca_recovery`     | `gbp.csv`, `pgd.csv`, `summary.toml`               |
//! | `autoencoder`      | `metrics.csv`, `summary.toml`                      |
//! | `lowrank_simplify` | `finetune.csv`, `summary.toml`, `simplified.json`  |
//! | `train_generic`    | `metrics.csv`, `summary.toml`, `network.json`      |
//!
//! plus `manifest.toml` in every case, which can be fed back as `--config`.

pub mod autoencoder;
pub mod config;
pub mod data;
pub mod generic;
pub mod lowrank;
pub mod metrics;
pub mod pca;

use std::fs;
use std::path::{Path, PathBuf};

pub use autoencoder::{run_autoencoder, AutoencoderReport};
pub use config::{
    parse_config, AutoencoderVariant, DataConfig, DataSource, ExperimentConfig, ExperimentKind,
    LayerConfig, ModelConfig, OutputConfig, CONFIG_REFERENCE,
};
pub use data::{gaussian_mixture, gen_gaussian_data, load_csv, teacher_classification};
pub use generic::{run_train_generic, TrainReport};
pub use lowrank::{run_lowrank_simplify, LowrankReport};
pub use metrics::{emit_csv, read_csv, Summary, MANIFEST_FILE};
pub use pca::{run_pca_recovery, PcaReport};

use crate::error::{Error, Result};
use crate::network::snapshot;

#[derive(Debug, Clone)]
pub enum RunReport {
    Pca(PcaReport),
    Autoencoder(AutoencoderReport),
    Lowrank(LowrankReport),
    Train(TrainReport),
}

impl RunReport {
    pub fn summary(&self) -> Summary {
        match self {
            RunReport::Pca(r) => r.summary(),
            RunReport::Autoencoder(r) => r.summary(),
            RunReport::Lowrank(r) => r.summary(),
            RunReport::Train(r) => r.summary(),
        }
    }
}

/// Runs the configured experiment and writes its artifacts; returns the
/// report and the output directory.
pub fn run(config: &ExperimentConfig) -> Result<(RunReport, PathBuf)> {
    config.validate()?;
    let dir = config.output.dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    metrics::write_manifest(&dir, config)?;
    let report = match config.experiment {
        ExperimentKind::PcaRecovery => {
            let r = run_pca_recovery(config)?;
            emit_csv(&r.gbp.records, &dir.join("gbp.csv"))?;
            emit_csv(&r.pgd.records, &dir.join("pgd.csv"))?;
            RunReport::Pca(r)
        }
        ExperimentKind::Autoencoder => {
            let r = run_autoencoder(config)?;
            emit_csv(&r.records, &dir.join("metrics.csv"))?;
            RunReport::Autoencoder(r)
        }
        ExperimentKind::LowrankSimplify => {
            let r = run_lowrank_simplify(config)?;
            emit_csv(&r.records, &dir.join("finetune.csv"))?;
            snapshot::save(&dir.join("simplified.json"), &r.spec, &r.params)?;
            RunReport::Lowrank(r)
        }
        ExperimentKind::TrainGeneric => {
            let r = run_train_generic(config)?;
            emit_csv(&r.records, &dir.join("metrics.csv"))?;
            snapshot::save(&dir.join("network.json"), &r.spec, &r.params)?;
            RunReport::Train(r)
        }
    };
    report.summary().write(&dir.join("summary.toml"))?;
    Ok((report, dir))
}

/// Loads `path`, applies command-line overrides and runs.
pub fn run_file(
    path: &Path,
    expected: Option<ExperimentKind>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(RunReport, PathBuf)> {
    let mut config = parse_config(path)?;
    if let Some(kind) = expected {
        if config.experiment != kind {
            return Err(Error::Config(format!(
                "{} describes a {} experiment, not {}",
                path.display(),
                config.experiment.name(),
                kind.name()
            )));
        }
    }
    if let Some(seed) = seed {
        config.optimizer.seed = seed;
    }
    if let Some(out) = out {
        config.output.dir = out.to_path_buf();
    }
    run(&config)
}
