//! Replacing a trained FC layer by its truncated SVD and fine-tuning.

use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::experiments::data::build_dataset;
use crate::experiments::metrics::Summary;
use crate::network::{snapshot, NetworkSpec, Params, RankSelection};
use crate::optim::{train, Method, MetricsRecord, OptimizerConfig};

/// Loss and (for labeled data) accuracy on the evaluation split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LowrankReport {
    pub layer: usize,
    pub rank: usize,
    pub params_before: usize,
    pub params_after: usize,
    pub before: Evaluation,
    pub after_surgery: Evaluation,
    pub after_finetune: Evaluation,
    pub records: Vec<MetricsRecord>,
    pub spec: NetworkSpec,
    pub params: Params,
}

impl LowrankReport {
    pub fn summary(&self) -> Summary {
        let mut s = Summary::default();
        s.int("layer", self.layer);
        s.int("rank", self.rank);
        s.int("params_before", self.params_before);
        s.int("params_after", self.params_after);
        for (name, e) in [
            ("before", self.before),
            ("after_surgery", self.after_surgery),
            ("after_finetune", self.after_finetune),
        ] {
            s.real(&format!("{name}_loss"), e.loss);
            if let Some(a) = e.accuracy {
                s.real(&format!("{name}_accuracy"), a);
            }
        }
        s
    }
}

pub fn run_lowrank_simplify(config: &ExperimentConfig) -> Result<LowrankReport> {
    let path = config
        .model
        .snapshot
        .as_deref()
        .ok_or_else(|| Error::Input("model.snapshot is required".into()))?;
    let (spec, params) = load_snapshot(path)?;
    simplify(config, &spec, &params)
}

fn load_snapshot(path: &Path) -> Result<(NetworkSpec, Params)> {
    if !path.is_file() {
        return Err(Error::Input(format!(
            "snapshot {} not found",
            path.display()
        )));
    }
    snapshot::load(path)
}

/// Surgery and fine-tuning on an in-memory network.
pub fn simplify(
    config: &ExperimentConfig,
    spec: &NetworkSpec,
    params: &Params,
) -> Result<LowrankReport> {
    let model = &config.model;
    let data = build_dataset(&config.data, model.rank)?;
    let (train_set, test_set) = data.split(config.data.holdout);
    let eval_set = if test_set.is_empty() {
        &train_set
    } else {
        &test_set
    };
    let evaluate = |spec: &NetworkSpec, params: &Params| -> Result<Evaluation> {
        let (loss, accuracy) = spec.evaluate(params, &eval_set.inputs, eval_set.target())?;
        Ok(Evaluation { loss, accuracy })
    };

    let selection = match model.explicit_rank {
        Some(p) => RankSelection::Rank(p),
        None => RankSelection::Energy(model.energy),
    };
    let before = evaluate(spec, params)?;
    let params_before = params
        .layer(model.layer)
        .map(|s| s.weights.rows() * s.weights.cols())
        .unwrap_or(0);
    let surgery = spec.factorize_layer(params, model.layer, selection)?;
    let after_surgery = evaluate(&surgery.spec, &surgery.params)?;

    let opt = OptimizerConfig {
        method: Method::Gbp,
        epochs: model.finetune_epochs.max(1),
        ..config.optimizer.clone()
    };
    let (tuned, records) = if model.finetune_epochs == 0 {
        (surgery.params.clone(), Vec::new())
    } else {
        train(
            &surgery.spec,
            surgery.params.clone(),
            &train_set,
            &opt,
            |_| {},
        )?
    };
    let after_finetune = evaluate(&surgery.spec, &tuned)?;
    Ok(LowrankReport {
        layer: model.layer,
        rank: surgery.factors.rank,
        params_before,
        params_after: surgery.factors.parameter_count(),
        before,
        after_surgery,
        after_finetune,
        records,
        spec: surgery.spec,
        params: tuned,
    })
}
