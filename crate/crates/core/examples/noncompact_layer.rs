//! A layer `f(W₂·W₁ᵀx + b)` with Stiefel W₁ and diagonal W₂: the effective
//! weight keeps mutually orthogonal columns of learnable norm.
//!
//!     cargo run --release --example noncompact_layer

use gbp::linalg::{matmul_tn, Matrix};
use gbp::network::{build_noncompact_stiefel_layer, Activation, LayerSpec, LossKind, NetworkSpec};
use gbp::optim::{train, Dataset, OptimizerConfig, Schedule, Targets};
use gbp::ManifoldKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gbp::Result<()> {
    let (n, p) = (10, 4);
    let mut layers = build_noncompact_stiefel_layer(n, p, Activation::Tanh)?;
    layers.push(LayerSpec::fc(p, 3, ManifoldKind::Euclidean, true));
    let spec = NetworkSpec::new(layers, LossKind::SoftmaxCrossEntropy)?;

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Matrix::random_normal(n, 300, 1.0, &mut rng);
    let labels = (0..300)
        .map(|j| {
            if x.get(0, j) + x.get(1, j) > 0.5 {
                0
            } else if x.get(2, j) > 0.0 {
                1
            } else {
                2
            }
        })
        .collect();
    let data = Dataset {
        inputs: x,
        targets: Targets::Labels(labels),
    };

    let config = OptimizerConfig {
        lr_start: 0.1,
        lr_end: 0.1,
        schedule: Schedule::Constant,
        epochs: 30,
        batch_size: 30,
        ..Default::default()
    };
    let params = spec.init_params(3)?;
    let (params, records) = train(&spec, params, &data, &config, |_| {})?;
    let last = records.last().expect("epochs > 0");
    println!(
        "final loss {:.4}, accuracy {:.3}",
        last.loss,
        last.accuracy.unwrap_or(0.0)
    );

    let w1 = &params.layer(0).expect("stiefel factor").weights;
    let d = params
        .layer(1)
        .expect("diagonal")
        .weights
        .as_slice()
        .to_vec();
    let effective = w1.scale_columns(&d)?;
    let gram = matmul_tn(&effective, &effective)?;
    let mut off = 0.0f64;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                off = off.max(gram.get(i, j).abs());
            }
        }
    }
    println!(
        "column norms of W₁·diag(w₂): {:?}",
        gram.diag().iter().map(|v| v.sqrt()).collect::<Vec<_>>()
    );
    println!("largest off-diagonal Gram entry: {off:.2e}");
    Ok(())
}
