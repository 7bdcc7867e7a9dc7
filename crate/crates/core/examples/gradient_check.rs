//! Central finite differences against backprop on a small tanh network with
//! one Stiefel layer.
//!
//!     cargo run --example gradient_check

use gbp::linalg::Matrix;
use gbp::network::{finite_diff_check, Activation, LayerSpec, LossKind, NetworkSpec, Target};
use gbp::ManifoldKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gbp::Result<()> {
    let spec = NetworkSpec::new(
        vec![
            LayerSpec::fc(10, 8, ManifoldKind::Stiefel, true),
            LayerSpec::activation(8, Activation::Tanh),
            LayerSpec::fc(8, 6, ManifoldKind::Euclidean, true),
            LayerSpec::activation(6, Activation::Tanh),
            LayerSpec::fc(6, 4, ManifoldKind::Euclidean, true),
        ],
        LossKind::SoftmaxCrossEntropy,
    )?;
    let params = spec.init_params(1)?;
    let x = Matrix::random_normal(10, 5, 1.0, &mut ChaCha8Rng::seed_from_u64(2));
    let labels = [0, 3, 1, 2, 1];
    for h in [1e-3, 1e-5, 1e-7] {
        let err = finite_diff_check(&spec, &params, &x, Target::Labels(&labels), h)?;
        println!("h = {h:e}: max relative error {err:.2e}");
    }
    Ok(())
}
