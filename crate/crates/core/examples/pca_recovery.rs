//! Principal subspace recovery with gBP and PGD from the same
//! initialization, compared against the eigen-decomposition optimum.
//!
//!     cargo run --release --example pca_recovery

use gbp::experiments::{run_pca_recovery, ExperimentConfig};

fn main() -> gbp::Result<()> {
    let mut config = ExperimentConfig::default();
    config.data.spectrum = Some(vec![
        8.0, 6.0, 5.0, 4.0, 1.5, 1.3, 1.2, 1.1, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3,
    ]);
    let report = run_pca_recovery(&config)?;

    println!("epoch   gBP loss        PGD loss");
    for (a, b) in report
        .gbp
        .records
        .iter()
        .zip(&report.pgd.records)
        .step_by(20)
    {
        println!("{:>5}   {:<14.8} {:<14.8}", a.epoch, a.loss, b.loss);
    }
    println!();
    println!(
        "optimum (trailing eigenvalues)  {:.10}",
        report.optimal_loss
    );
    println!(
        "gBP final loss                  {:.10}",
        report.gbp.final_loss
    );
    println!(
        "PGD final loss                  {:.10}",
        report.pgd.final_loss
    );
    println!(
        "gBP projector error             {:.3e}",
        report.gbp.projector_error
    );
    println!(
        "PGD projector error             {:.3e}",
        report.pgd.projector_error
    );
    Ok(())
}
