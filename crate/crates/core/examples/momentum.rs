//! BP, gBP and PGD with and without momentum on a Stiefel-constrained
//! classifier; shows the final loss and how far each stays from the
//! constraint.
//!
//!     cargo run --release --example momentum

use gbp::experiments::teacher_classification;
use gbp::network::{Activation, LayerSpec, LossKind, NetworkSpec};
use gbp::optim::{train, Dataset, Method, OptimizerConfig, Targets};
use gbp::ManifoldKind;

fn main() -> gbp::Result<()> {
    let (x, labels) = teacher_classification(24, 2000, 5, 4, 1)?;
    let data = Dataset {
        inputs: x,
        targets: Targets::Labels(labels),
    };
    let spec = NetworkSpec::new(
        vec![
            LayerSpec::fc(24, 12, ManifoldKind::Stiefel, true),
            LayerSpec::activation(12, Activation::Tanh),
            LayerSpec::fc(12, 5, ManifoldKind::Euclidean, true),
        ],
        LossKind::SoftmaxCrossEntropy,
    )?;
    let init = spec.init_params(2)?;
    println!("method  mu    final loss  accuracy  max defect");
    for method in [Method::Bp, Method::Gbp, Method::Pgd] {
        for momentum in [0.0, 0.9] {
            let config = OptimizerConfig {
                method,
                momentum,
                lr_start: 0.05,
                lr_end: 0.005,
                epochs: 30,
                ..Default::default()
            };
            let (params, records) = train(&spec, init.clone(), &data, &config, |_| {})?;
            let last = records.last().expect("epochs > 0");
            println!(
                "{:<7} {momentum:<5} {:<11.5} {:<9.3} {:.2e}",
                format!("{method:?}"),
                last.loss,
                last.accuracy.unwrap_or(0.0),
                params.layer(0).expect("stiefel layer").defect()
            );
        }
    }
    Ok(())
}
