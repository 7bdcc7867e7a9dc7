//! Versioned JSON snapshots of a network and its weights.
//!
//! Layout (`version` 1):
//!
//! ```json
//! {
//!   "format": "gbp-network",
//!   "version": 1,
//!   "loss": "softmax_cross_entropy",
//!   "layers": [
//!     { "spec": { "kind": "fully_connected", "in_dim": 4, "out_dim": 2,
//!                 "manifold": "stiefel", "bias": true },
//!       "weights": { "rows": 4, "cols": 2, "data": [/* row-major f64 */] },
//!       "bias": [0.0, 0.0] },
//!     { "spec": { "kind": "activation", "dim": 2, "activation": "tanh" } }
//!   ]
//! }
//! ```
//!
//! Reals are written in shortest round-trip decimal form, so loading a
//! snapshot restores every weight bit for bit. Momentum buffers are not
//! stored.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::network::layer::{LayerSpec, ParamState};
use crate::network::loss::LossKind;
use crate::network::net::{NetworkSpec, Params};

pub const SNAPSHOT_FORMAT: &str = "gbp-network";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotFile {
    format: String,
    version: u32,
    loss: LossKind,
    layers: Vec<LayerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerEntry {
    spec: LayerSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<f64>>,
}

pub fn to_json(spec: &NetworkSpec, params: &Params) -> Result<String> {
    let layers = spec
        .layers
        .iter()
        .enumerate()
        .map(|(k, layer)| LayerEntry {
            spec: layer.clone(),
            weights: params.layer(k).map(|p| p.weights.clone()),
            bias: params.layer(k).and_then(|p| p.bias.clone()),
        })
        .collect();
    let file = SnapshotFile {
        format: SNAPSHOT_FORMAT.into(),
        version: SNAPSHOT_VERSION,
        loss: spec.loss,
        layers,
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Snapshot(e.to_string()))
}

pub fn from_json(text: &str) -> Result<(NetworkSpec, Params)> {
    let file: SnapshotFile =
        serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
    if file.format != SNAPSHOT_FORMAT || file.version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!(
            "unsupported snapshot {} v{}",
            file.format, file.version
        )));
    }
    let spec = NetworkSpec::new(
        file.layers.iter().map(|l| l.spec.clone()).collect(),
        file.loss,
    )?;
    let mut slots = Vec::with_capacity(file.layers.len());
    for (k, entry) in file.layers.into_iter().enumerate() {
        let manifold = spec.layers[k].weight_manifold()?;
        let slot = match (manifold, entry.weights) {
            (None, None) => None,
            (Some(m), Some(w)) => {
                let bias = entry.bias;
                if spec.layers[k].has_bias() != bias.is_some()
                    || bias
                        .as_ref()
                        .is_some_and(|b| b.len() != spec.layers[k].out_dim())
                {
                    return Err(Error::Snapshot(format!(
                        "layer {k}: bias does not match spec"
                    )));
                }
                Some(
                    ParamState::new(w, m, bias)
                        .map_err(|e| Error::Snapshot(format!("layer {k}: {e}")))?,
                )
            }
            _ => {
                return Err(Error::Snapshot(format!(
                    "layer {k}: weights do not match spec"
                )))
            }
        };
        slots.push(slot);
    }
    Ok((spec, Params::new(slots)))
}

pub fn save(path: &Path, spec: &NetworkSpec, params: &Params) -> Result<()> {
    let text = to_json(spec, params)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(NetworkSpec, Params)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldKind;
    use crate::network::layer::Activation;

    fn sample() -> (NetworkSpec, Params) {
        let spec = NetworkSpec::new(
            vec![
                LayerSpec::fc(5, 3, ManifoldKind::Stiefel, true),
                LayerSpec::activation(3, Activation::Tanh),
                LayerSpec::DiagonalScale {
                    dim: 3,
                    bias: false,
                },
                LayerSpec::transposed(3, 5, ManifoldKind::Oblique, true),
                LayerSpec::fc(5, 4, ManifoldKind::Euclidean, true),
            ],
            LossKind::SoftmaxCrossEntropy,
        )
        .unwrap();
        let params = spec.init_params(17).unwrap();
        (spec, params)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (spec, params) = sample();
        let text = to_json(&spec, &params).unwrap();
        let (spec2, params2) = from_json(&text).unwrap();
        assert_eq!(spec, spec2);
        for ((_, a), (_, b)) in params.iter().zip(params2.iter()) {
            assert_eq!(a.weights, b.weights);
            assert_eq!(a.bias, b.bias);
            assert_eq!(a.manifold, b.manifold);
        }
        assert_eq!(text, to_json(&spec2, &params2).unwrap());
    }

    #[test]
    fn rejects_unknown_version_and_bad_shapes() {
        let (spec, params) = sample();
        let text = to_json(&spec, &params).unwrap();
        assert!(from_json(&text.replace("\"version\": 1", "\"version\": 2")).is_err());
        assert!(from_json(&text.replace("\"rows\": 5", "\"rows\": 6")).is_err());
        assert!(from_json("{}").is_err());
    }
}
