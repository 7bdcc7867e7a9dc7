//! Subspace recovery: a shared Stiefel weight used as encoder `Wᵀx` and
//! decoder `W·`, trained on centered Gaussian data.

use crate::error::Result;
use crate::experiments::config::ExperimentConfig;
use crate::experiments::data::build_dataset;
use crate::experiments::metrics::Summary;
use crate::linalg::{jacobi_eigh, matmul_nt, Matrix};
use crate::manifold::ManifoldKind;
use crate::network::{LayerSpec, LossKind, NetworkSpec, Params, Target};
use crate::optim::{train, Method, MetricsRecord, OptimizerConfig};

#[derive(Debug, Clone)]
pub struct PcaRun {
    pub records: Vec<MetricsRecord>,
    /// Full-data loss at the end of training.
    pub final_loss: f64,
    /// `‖WWᵀ − V_pV_pᵀ‖_F`
    pub projector_error: f64,
    pub weights: Matrix,
}

#[derive(Debug, Clone)]
pub struct PcaReport {
    pub gbp: PcaRun,
    pub pgd: PcaRun,
    /// Sum of the trailing eigenvalues of the sample covariance.
    pub optimal_loss: f64,
    /// Eigenvalues of the sample covariance, descending.
    pub eigenvalues: Vec<f64>,
}

impl PcaReport {
    pub fn gbp_not_worse(&self) -> bool {
        self.gbp.final_loss <= self.pgd.final_loss
    }

    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        s.real("optimal_loss", self.optimal_loss);
        s.real("gbp_final_loss", self.gbp.final_loss);
        s.real("pgd_final_loss", self.pgd.final_loss);
        s.real(
            "gbp_relative_gap",
            self.gbp.final_loss / self.optimal_loss - 1.0,
        );
        s.real(
            "pgd_relative_gap",
            self.pgd.final_loss / self.optimal_loss - 1.0,
        );
        s.real("gbp_projector_error", self.gbp.projector_error);
        s.real("pgd_projector_error", self.pgd.projector_error);
        s.flag("gbp_not_worse_than_pgd", self.gbp_not_worse());
        s
    }
}

/// `[FC(n→p, Stiefel, no bias), TransposedFc tied to it]` under MSE.
pub fn pca_network(n: usize, p: usize) -> Result<NetworkSpec> {
    NetworkSpec::new(
        vec![
            LayerSpec::fc(n, p, ManifoldKind::Stiefel, false),
            LayerSpec::tied(p, n, 0),
        ],
        LossKind::MseReconstruction,
    )
}

pub fn run_pca_recovery(config: &ExperimentConfig) -> Result<PcaReport> {
    let p = config.model.rank;
    let data = build_dataset(&config.data, p)?;
    let x = &data.inputs;
    let (n, samples) = x.shape();

    let cov = matmul_nt(x, x)?.scale(1.0 / samples as f64);
    let eig = jacobi_eigh(&cov)?;
    let optimal_loss: f64 = eig.values[p.min(n)..].iter().sum();
    let vp = eig.vectors.leading_columns(p.min(n));
    let oracle_projector = matmul_nt(&vp, &vp)?;

    let spec = pca_network(n, p)?;
    let init = spec.init_params(config.optimizer.seed)?;
    let run = |method: Method| -> Result<PcaRun> {
        let opt = OptimizerConfig {
            method,
            ..config.optimizer.clone()
        };
        let (params, records) = train(&spec, init.clone(), &data, &opt, |_| {})?;
        finish(&spec, params, records, x, &oracle_projector)
    };
    Ok(PcaReport {
        gbp: run(Method::Gbp)?,
        pgd: run(Method::Pgd)?,
        optimal_loss,
        eigenvalues: eig.values,
    })
}

fn finish(
    spec: &NetworkSpec,
    params: Params,
    records: Vec<MetricsRecord>,
    x: &Matrix,
    oracle_projector: &Matrix,
) -> Result<PcaRun> {
    let (final_loss, _) = spec.evaluate(&params, x, Target::Values(x))?;
    let w = params.layer(0).expect("pca layer").weights.clone();
    let projector_error = matmul_nt(&w, &w)?.sub(oracle_projector)?.frobenius_norm();
    Ok(PcaRun {
        records,
        final_loss,
        projector_error,
        weights: w,
    })
}
