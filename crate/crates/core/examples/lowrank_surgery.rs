//! Train a classifier on rank-8 teacher labels, replace its first layer by a
//! truncated SVD (U, diag, V with orthonormal U and V) and fine-tune with gBP.
//!
//!     cargo run --release --example lowrank_surgery

use gbp::experiments::lowrank::simplify;
use gbp::experiments::{run_train_generic, DataSource, ExperimentConfig, ExperimentKind};
use gbp::optim::Method;

fn main() -> gbp::Result<()> {
    let mut config = ExperimentConfig {
        experiment: ExperimentKind::TrainGeneric,
        ..Default::default()
    };
    config.data.source = DataSource::Teacher;
    config.data.n = 64;
    config.data.samples = 4000;
    config.data.classes = 10;
    config.data.holdout = 0.25;
    config.data.seed = 5;
    config.optimizer.method = Method::Bp;
    config.optimizer.lr_start = 0.2;
    config.optimizer.lr_end = 0.01;
    config.optimizer.momentum = 0.9;
    config.optimizer.epochs = 60;

    let trained = run_train_generic(&config)?;
    println!(
        "trained 64-48-10 net: test accuracy {:.3}",
        trained.test_accuracy.unwrap_or(f64::NAN)
    );

    config.experiment = ExperimentKind::LowrankSimplify;
    config.optimizer.lr_start = 0.02;
    config.optimizer.lr_end = 0.002;
    config.optimizer.seed = 11;
    for energy in [40.0, 60.0, 80.0, 100.0] {
        config.model.energy = energy;
        let r = simplify(&config, &trained.spec, &trained.params)?;
        println!(
            "energy {energy:>5}%: rank {:>2}, params {:>4} -> {:>4}, acc {:.3} -> {:.3} (surgery) -> {:.3} (fine-tuned)",
            r.rank,
            r.params_before,
            r.params_after,
            r.before.accuracy.unwrap_or(f64::NAN),
            r.after_surgery.accuracy.unwrap_or(f64::NAN),
            r.after_finetune.accuracy.unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
