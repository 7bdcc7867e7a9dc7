//! Feed-forward networks with manifold-tagged parameters.
//!
//! Backprop here always returns the raw Euclidean gradient `∂E/∂W`; turning
//! it into a constrained update is the optimizer's job.

mod gradcheck;
mod layer;
mod loss;
mod lowrank;
mod net;
pub mod snapshot;

pub use gradcheck::finite_diff_check;
pub use layer::{
    activation_backward, activation_forward, build_noncompact_stiefel_layer, fc_backward,
    fc_forward, transposed_fc_backward, transposed_fc_forward, Activation, FcGrads, LayerSpec,
    ParamState,
};
pub use loss::{accuracy, mse_reconstruction_loss, softmax_ce_loss, LossKind, Target};
pub use lowrank::{factorize_fc_lowrank, LowRankFactors, RankSelection, Surgery};
pub use net::{ForwardCache, Gradients, NetworkSpec, ParamGrad, Params};
