//! DAE, ODAE and O²DAE on a labeled Gaussian mixture, with a
//! nearest-centroid probe on the codes.
//!
//!     cargo run --release --example autoencoder

use gbp::experiments::{
    run_autoencoder, AutoencoderVariant, DataSource, ExperimentConfig, ExperimentKind,
};

fn main() -> gbp::Result<()> {
    let mut config = ExperimentConfig {
        experiment: ExperimentKind::Autoencoder,
        ..Default::default()
    };
    config.data.source = DataSource::GaussianMixture;
    config.data.n = 32;
    config.data.classes = 5;
    config.data.separation = 4.0;
    config.model.rank = 12;
    config.optimizer.lr_start = 0.1;
    config.optimizer.lr_end = 0.005;
    config.optimizer.epochs = 60;

    println!("variant  test loss   probe acc  enc defect  dec defect");
    for variant in [
        AutoencoderVariant::Dae,
        AutoencoderVariant::Odae,
        AutoencoderVariant::O2dae,
    ] {
        config.model.variant = variant;
        // the unconstrained variant needs a smaller step
        config.optimizer.lr_start = if variant == AutoencoderVariant::Dae {
            0.02
        } else {
            0.1
        };
        let r = run_autoencoder(&config)?;
        println!(
            "{:<8} {:<11.5} {:<10.3} {:<11.2e} {:.2e}",
            format!("{variant:?}").to_lowercase(),
            r.test_loss,
            r.probe_accuracy.unwrap_or(f64::NAN),
            r.encoder_defect,
            r.decoder_defect
        );
    }
    Ok(())
}
