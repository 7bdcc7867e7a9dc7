//! Generalized backpropagation for feed-forward networks whose weights live
//! on matrix manifolds.
//!
//! Constrained weights are updated by projecting the Euclidean gradient onto
//! the tangent space at the current point and retracting back onto the
//! manifold; unconstrained weights and biases take ordinary gradient steps.
//! The Stiefel manifold (orthonormal columns) is the main case, with the
//! oblique manifold (unit-norm columns) and plain Euclidean space alongside.
//!
//! Layout:
//! - [`linalg`]: dense kernels (QR with positive-diagonal R, Jacobi, thin SVD)
//! - [`manifold`]: tangent projections, retractions, feasibility, sampling
//! - [`network`]: layers, losses, backprop, low-rank surgery, snapshots
//! - [`optim`]: BP / gBP / PGD steppers, schedules and the training loop
//! - [`experiments`]: config-driven runners and CSV metrics

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod manifold;
pub mod network;
pub mod optim;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use manifold::{Manifold, ManifoldKind};
