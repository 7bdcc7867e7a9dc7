//! Unit-norm filters: an oblique-constrained first layer trained with gBP
//! next to the same network trained with PGD.
//!
//!     cargo run --release --example oblique_filters

use gbp::experiments::gaussian_mixture;
use gbp::network::{Activation, LayerSpec, LossKind, NetworkSpec};
use gbp::optim::{train, Dataset, Method, OptimizerConfig, Targets};
use gbp::ManifoldKind;

fn main() -> gbp::Result<()> {
    let (x, labels) = gaussian_mixture(20, 1500, 4, 3.0, 9)?;
    let data = Dataset {
        inputs: x,
        targets: Targets::Labels(labels),
    };
    let spec = NetworkSpec::new(
        vec![
            LayerSpec::fc(20, 16, ManifoldKind::Oblique, true),
            LayerSpec::activation(16, Activation::Relu),
            LayerSpec::fc(16, 4, ManifoldKind::Euclidean, true),
        ],
        LossKind::SoftmaxCrossEntropy,
    )?;
    let init = spec.init_params(4)?;
    for method in [Method::Gbp, Method::Pgd] {
        let config = OptimizerConfig {
            method,
            epochs: 40,
            momentum: 0.5,
            ..Default::default()
        };
        let (params, records) = train(&spec, init.clone(), &data, &config, |_| {})?;
        let w = &params.layer(0).expect("filters").weights;
        let norms: Vec<f64> = (0..w.cols()).map(|j| w.column_norm(j)).collect();
        let worst = norms.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        let last = records.last().expect("epochs > 0");
        println!(
            "{method:?}: loss {:.4}, train accuracy {:.3}, max |‖w_j‖ − 1| = {worst:.1e}",
            last.loss,
            last.accuracy.unwrap_or(0.0)
        );
    }
    Ok(())
}
